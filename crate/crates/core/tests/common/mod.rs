//! Random instances and brute-force oracles shared by the integration and
//! acceptance tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use enftest::automaton::{EnforcerModel, EventSymbol, ModelDocument, TransitionDocument};
use enftest::hsi::{
    canonical_cmp, distinguishable, generate_sequences, separating_families, transition_cover,
    InputSequence,
};
use enftest::ripping::{RipMeta, RipTransition, RippedState, RippingModel};
use enftest::sut::{GuiState, StateDigest, UiAction};
use enftest::testgen::generate_event_paths;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// Enforcer automata
// ---------------------------------------------------------------------------

/// Deterministic partial automaton with up to `max_states` states and
/// `max_inputs` inputs; every (state, input) is enabled with probability
/// 0.7 and emits up to two outputs.
pub fn random_automaton(
    rng: &mut ChaCha8Rng,
    max_states: usize,
    max_inputs: usize,
) -> EnforcerModel {
    let n = rng.gen_range(1..=max_states);
    let k = rng.gen_range(1..=max_inputs);
    let states: Vec<String> = (0..n).map(|i| format!("q{i}")).collect();
    let inputs: Vec<String> = (0..k).map(|i| format!("in{i}_req")).collect();
    let outputs: Vec<String> = (0..3).map(|i| format!("out{i}_api")).collect();
    let mut transitions = Vec::new();
    for s in &states {
        for i in &inputs {
            if rng.gen_bool(0.7) {
                let len = rng.gen_range(0..=2);
                transitions.push(TransitionDocument {
                    from: s.clone(),
                    trigger: i.clone(),
                    emissions: (0..len)
                        .map(|_| outputs.choose(rng).unwrap().clone())
                        .collect(),
                    to: states.choose(rng).unwrap().clone(),
                });
            }
        }
    }
    EnforcerModel::from_document(&ModelDocument {
        states,
        initial: "q0".into(),
        inputs,
        outputs,
        internals: Vec::new(),
        transitions,
    })
    .expect("generated automata are valid")
}

/// λ by direct lookup in the transition list.
pub fn brute_run(
    m: &EnforcerModel,
    from: &str,
    inputs: &[EventSymbol],
) -> Option<(Vec<EventSymbol>, String)> {
    let mut state = from.to_string();
    let mut out = Vec::new();
    for i in inputs {
        let t = m
            .transitions()
            .iter()
            .find(|t| t.from == state && &t.trigger == i)?;
        out.extend(t.emissions.iter().cloned());
        state = t.to.clone();
    }
    Some((out, state))
}

pub fn all_words(alphabet: &[EventSymbol], max_len: usize) -> Vec<Vec<EventSymbol>> {
    let mut words = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &layer {
            for a in alphabet {
                let mut v: Vec<EventSymbol> = w.clone();
                v.push(a.clone());
                next.push(v);
            }
        }
        words.extend(next.iter().cloned());
        layer = next;
    }
    words
}

fn brute_reachable(m: &EnforcerModel) -> BTreeSet<String> {
    let mut seen = BTreeSet::from([m.initial().to_string()]);
    let mut queue = VecDeque::from([m.initial().to_string()]);
    while let Some(s) = queue.pop_front() {
        for t in m.transitions().iter().filter(|t| t.from == s) {
            if seen.insert(t.to.clone()) {
                queue.push_back(t.to.clone());
            }
        }
    }
    seen
}

/// Every reachable transition is exercised by the last input of exactly
/// one non-empty cover member, under replay from the initial state.
pub fn check_cover(m: &EnforcerModel) -> Result<(), String> {
    let cover = transition_cover(m);
    let reachable = brute_reachable(m);
    if cover.entries.first().map(|e| e.sequence.is_empty()) != Some(true) {
        return Err("cover does not start with ε".into());
    }
    let mut exercised = BTreeSet::new();
    for e in &cover.entries[1..] {
        let (last, prefix) = e
            .sequence
            .split_last()
            .ok_or("empty non-first cover member")?;
        let (_, before) = brute_run(m, m.initial(), prefix)
            .ok_or_else(|| format!("cover member {:?} not enabled", e.sequence))?;
        let t = m
            .transitions()
            .iter()
            .position(|t| t.from == before && &t.trigger == last)
            .ok_or_else(|| format!("last input of {:?} not enabled", e.sequence))?;
        if !exercised.insert(t) {
            return Err(format!("transition {t} covered twice"));
        }
    }
    let expected: BTreeSet<usize> = m
        .transitions()
        .iter()
        .enumerate()
        .filter(|(_, t)| reachable.contains(&t.from))
        .map(|(i, _)| i)
        .collect();
    if exercised != expected {
        return Err(format!("covered {exercised:?}, reachable {expected:?}"));
    }
    Ok(())
}

fn separates(m: &EnforcerModel, a: &str, b: &str, w: &[EventSymbol]) -> bool {
    match (brute_run(m, a, w), brute_run(m, b, w)) {
        (Some((x, _)), Some((y, _))) => x != y,
        _ => false,
    }
}

/// Witnesses separate their pairs, and every separated pair has members
/// of both families sharing a separating common prefix.
pub fn check_separation(m: &EnforcerModel) -> Result<(), String> {
    let fam = separating_families(m);
    for w in &fam.witnesses {
        if !separates(m, &w.left, &w.right, &w.prefix) {
            return Err(format!(
                "{:?} does not separate {} and {}",
                w.prefix, w.left, w.right
            ));
        }
    }
    let states: Vec<&String> = m.states().iter().collect();
    for (i, a) in states.iter().enumerate() {
        for b in &states[i + 1..] {
            let skipped = fam
                .indistinguishable
                .contains(&((*a).clone(), (*b).clone()));
            let found = fam.family(a).iter().any(|beta| {
                fam.family(b).iter().any(|gamma| {
                    let common = beta.iter().zip(gamma).take_while(|(x, y)| x == y).count();
                    (1..=common).any(|l| separates(m, a, b, &beta[..l]))
                })
            });
            if skipped == found {
                return Err(format!(
                    "pair ({a}, {b}): indistinguishable={skipped} but family witness={found}"
                ));
            }
        }
    }
    Ok(())
}

/// `distinguishable` agrees with the least separating word of length up
/// to |S| found by enumeration.
pub fn check_distinguishable(m: &EnforcerModel) -> Result<(), String> {
    let alphabet: Vec<EventSymbol> = m.inputs().iter().cloned().collect();
    let mut words = all_words(&alphabet, m.states().len());
    words.sort_by(|a, b| canonical_cmp(a, b));
    for a in m.states() {
        for b in m.states() {
            if a == b {
                continue;
            }
            let brute = words.iter().find(|w| separates(m, a, b, w)).cloned();
            let got = distinguishable(m, a, b);
            if got != brute {
                return Err(format!(
                    "distinguishable({a}, {b}) = {got:?}, enumeration = {brute:?}"
                ));
            }
        }
    }
    Ok(())
}

/// The suite equals the naive product of cover and families.
pub fn check_concatenation(m: &EnforcerModel) -> Result<(), String> {
    let cover = transition_cover(m);
    let fam = separating_families(m);
    let mut expected: BTreeSet<InputSequence> = BTreeSet::new();
    for p in cover.sequences() {
        let (_, reached) = brute_run(m, m.initial(), &p).ok_or("cover member not enabled")?;
        let h = fam.family(&reached);
        if h.is_empty() && !p.is_empty() {
            expected.insert(p.clone());
        }
        for sep in h {
            let mut w = p.clone();
            w.extend(sep.iter().cloned());
            expected.insert(w);
        }
    }
    let got: Vec<InputSequence> = generate_sequences(m)
        .into_iter()
        .map(|s| s.events)
        .collect();
    let got_set: BTreeSet<InputSequence> = got.iter().cloned().collect();
    if got_set.len() != got.len() {
        return Err("duplicate sequences".into());
    }
    if got.windows(2).any(|w| canonical_cmp(&w[0], &w[1]).is_ge()) {
        return Err("sequences not in canonical order".into());
    }
    if got_set != expected {
        return Err(format!("suite {got_set:?} != naive product {expected:?}"));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Ripping models
// ---------------------------------------------------------------------------

pub const MONITORED: [&str; 3] = ["x", "y", "z"];

pub fn digest(name: &str) -> StateDigest {
    serde_json::from_value(serde_json::Value::from(name)).unwrap()
}

pub fn monitored() -> BTreeSet<String> {
    MONITORED.iter().map(|s| s.to_string()).collect()
}

fn action_pool() -> Vec<UiAction> {
    vec![
        UiAction::touch("a"),
        UiAction::touch("b"),
        UiAction::long_touch("a"),
        UiAction::set_text("c"),
        UiAction::back(),
    ]
}

/// Ripping model with up to `max_states` states and up to three outgoing
/// transitions each. Actions may repeat on one state, so a single action
/// sequence can match several transition paths. Labels mix monitored and
/// unmonitored (`w`) events.
pub fn random_ripping_model(rng: &mut ChaCha8Rng, max_states: usize) -> RippingModel {
    let n = rng.gen_range(1..=max_states);
    let names: Vec<String> = (0..n).map(|i| format!("g{i}")).collect();
    let pool = action_pool();
    let mut transitions = Vec::new();
    for from in &names {
        let out = rng.gen_range(0..=3);
        for _ in 0..out {
            let len = rng.gen_range(0..=2);
            let events = (0..len)
                .map(|_| {
                    if rng.gen_bool(0.15) {
                        "w".to_string()
                    } else {
                        MONITORED.choose(rng).unwrap().to_string()
                    }
                })
                .collect();
            transitions.push(RipTransition {
                from: digest(from),
                action: pool.choose(rng).unwrap().clone(),
                events,
                to: digest(names.choose(rng).unwrap()),
            });
        }
    }
    RippingModel {
        states: names
            .iter()
            .map(|s| RippedState {
                digest: digest(s),
                views: GuiState::default(),
            })
            .collect(),
        initial: digest(&names[0]),
        transitions,
        meta: RipMeta::default(),
    }
}

/// Target of length 1..=4; half of them are the monitored events of a
/// random walk, so that many are realizable.
pub fn random_target(rng: &mut ChaCha8Rng, model: &RippingModel) -> Vec<EventSymbol> {
    let len = rng.gen_range(1..=4);
    let mut names: Vec<String> = Vec::new();
    if rng.gen_bool(0.5) {
        let mut at = model.initial.clone();
        for _ in 0..12 {
            let out: Vec<&RipTransition> =
                model.transitions.iter().filter(|t| t.from == at).collect();
            let Some(t) = out.choose(rng) else { break };
            names.extend(t.events.iter().filter(|e| e.as_str() != "w").cloned());
            at = t.to.clone();
        }
        names.truncate(len);
    }
    if names.is_empty() {
        names = (0..len)
            .map(|_| MONITORED.choose(rng).unwrap().to_string())
            .collect();
    }
    names.iter().map(|n| EventSymbol::request(n)).collect()
}

/// All action sequences of length up to `max_len` that some transition
/// path labels with exactly `target`, shortest first, then lexicographic.
pub fn brute_paths(
    model: &RippingModel,
    target: &[EventSymbol],
    max_len: usize,
) -> Vec<Vec<UiAction>> {
    let want: Vec<String> = target.iter().map(|s| s.name().to_string()).collect();
    let alphabet = monitored();
    let mut found = BTreeSet::new();
    let mut stack = vec![(
        model.initial.clone(),
        Vec::<UiAction>::new(),
        Vec::<String>::new(),
    )];
    while let Some((at, path, seen)) = stack.pop() {
        if seen == want {
            found.insert(path.clone());
        }
        if path.len() == max_len {
            continue;
        }
        for t in model.transitions.iter().filter(|t| t.from == at) {
            let mut s = seen.clone();
            s.extend(t.events.iter().filter(|e| alphabet.contains(*e)).cloned());
            if !want.starts_with(&s) {
                continue;
            }
            let mut p = path.clone();
            p.push(t.action.clone());
            stack.push((t.to.clone(), p, s));
        }
    }
    let mut out: Vec<Vec<UiAction>> = found.into_iter().collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

/// Compares `generate_event_paths` with enumeration up to length
/// min(12, 2|S|) on one instance.
pub fn check_paths(model: &RippingModel, target: &[EventSymbol], n: usize) -> Result<(), String> {
    let bound = 12.min(2 * model.states.len());
    let got: Vec<Vec<UiAction>> = generate_event_paths(model, target, n, &monitored())
        .into_iter()
        .filter(|p| p.len() <= 12)
        .collect();
    // The search yields shortest paths first, so dropping its results
    // longer than 12 leaves exactly the first n enumerated ones.
    let want: Vec<Vec<UiAction>> = brute_paths(model, target, bound)
        .into_iter()
        .take(n)
        .collect();
    if got != want {
        return Err(format!(
            "target {target:?}: search {got:?}, enumeration {want:?}"
        ));
    }
    Ok(())
}
