mod common;

use common::*;

const INSTANCES: u64 = 200;

fn for_each_automaton(check: fn(&enftest::automaton::EnforcerModel) -> Result<(), String>) {
    for seed in 0..INSTANCES {
        let m = random_automaton(&mut rng(seed), 6, 5);
        if let Err(e) = check(&m) {
            panic!("seed {seed}: {e}\n{}", m.to_json());
        }
    }
}

#[test]
fn cover_reaches_every_reachable_transition() {
    for_each_automaton(check_cover);
}

#[test]
fn separating_sequences_separate() {
    for_each_automaton(check_separation);
}

#[test]
fn distinguishable_matches_enumeration() {
    for_each_automaton(check_distinguishable);
}

#[test]
fn suite_is_naive_product() {
    for_each_automaton(check_concatenation);
}
