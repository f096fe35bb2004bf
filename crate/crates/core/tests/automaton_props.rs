mod common;

use common::*;
use enftest::automaton::{EnforcerModel, EnforcerState, EventSymbol, StepError};
use proptest::prelude::*;
use std::sync::Arc;

fn word(m: &EnforcerModel, picks: &[usize]) -> Vec<EventSymbol> {
    let inputs: Vec<EventSymbol> = m.inputs().iter().cloned().collect();
    picks
        .iter()
        .map(|&i| inputs[i % inputs.len()].clone())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn run_agrees_with_transition_lookup(seed: u64, picks in prop::collection::vec(0usize..5, 0..10)) {
        let m = random_automaton(&mut rng(seed), 6, 5);
        let w = word(&m, &picks);
        match (m.run_from(m.initial(), &w), brute_run(&m, m.initial(), &w)) {
            (Ok(got), Some(want)) => prop_assert_eq!(got, want),
            (Err(e), None) => {
                // The reported position is the first disabled input.
                let first = (1..=w.len()).find(|&i| brute_run(&m, m.initial(), &w[..i]).is_none());
                prop_assert_eq!(Some(e.position), first);
            }
            (got, want) => prop_assert!(false, "run {:?} vs lookup {:?}", got, want),
        }
    }

    #[test]
    fn runs_compose(seed: u64, picks in prop::collection::vec(0usize..5, 0..10), cut in 0usize..10) {
        let m = random_automaton(&mut rng(seed), 6, 5);
        let w = word(&m, &picks);
        let cut = cut.min(w.len());
        if let Ok((out, end)) = m.run_from(m.initial(), &w) {
            let (head, mid) = m.run_from(m.initial(), &w[..cut]).unwrap();
            let (tail, end2) = m.run_from(&mid, &w[cut..]).unwrap();
            prop_assert_eq!(out, [head, tail].concat());
            prop_assert_eq!(end, end2);
        }
    }

    #[test]
    fn stepping_matches_run_on_enabled_walks(seed: u64, picks in prop::collection::vec(0usize..5, 0..12)) {
        let m = Arc::new(random_automaton(&mut rng(seed), 6, 5));
        let mut state = EnforcerState::new(Arc::clone(&m));
        let mut walked = Vec::new();
        let mut emitted = Vec::new();
        for p in picks {
            let enabled: Vec<EventSymbol> = m.enabled_inputs(state.current()).unwrap().into_iter().collect();
            if enabled.is_empty() {
                break;
            }
            let i = enabled[p % enabled.len()].clone();
            emitted.extend(state.step(&i).unwrap());
            walked.push(i);
        }
        let (out, end) = m.run_from(m.initial(), &walked).unwrap();
        prop_assert_eq!(out, emitted);
        prop_assert_eq!(end.as_str(), state.current());
        prop_assert_eq!(state.trace().len(), walked.len());
    }

    #[test]
    fn disabled_step_leaves_state_unchanged(seed: u64, pick in 0usize..5) {
        let m = Arc::new(random_automaton(&mut rng(seed), 6, 5));
        let mut state = EnforcerState::new(Arc::clone(&m));
        let i = word(&m, &[pick]).remove(0);
        if m.successor(m.initial(), &i).is_none() {
            let before = state.current().to_string();
            let is_not_enabled = matches!(state.step(&i), Err(StepError::NotEnabled { .. }));
            prop_assert!(is_not_enabled);
            prop_assert_eq!(state.current(), before.as_str());
        }
    }

    #[test]
    fn json_round_trip(seed: u64) {
        let m = random_automaton(&mut rng(seed), 6, 5);
        let back = EnforcerModel::from_json(&m.to_json()).unwrap();
        prop_assert_eq!(back.to_json(), m.to_json());
        prop_assert_eq!(back.transitions(), m.transitions());
    }
}
