//! Test-sequence derivation with harmonized state identifiers (HSI).
//!
//! The suite is the concatenation of a transition cover `P` with per-state
//! separating families `H_i`: every sequence of `P` that ends in state `s_i`
//! is extended with each member of `H_i`. Only exact duplicates are removed
//! afterwards. Prefixes are kept on purpose, since a longer sequence may be
//! infeasible in the system under test while its prefix is not.
//!
//! The implementation is assumed to have as many states as the model, so
//! no extra-state extension is generated.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::automaton::{format_sequence, EnforcerModel, EventSymbol};

pub type InputSequence = Vec<EventSymbol>;

/// Orders sequences by length, then lexicographically by symbol.
pub fn canonical_cmp(a: &[EventSymbol], b: &[EventSymbol]) -> std::cmp::Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

/// Member of the transition cover.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverEntry {
    pub sequence: InputSequence,
    /// Transition exercised by the last input; `None` for ε.
    pub transition: Option<usize>,
    /// State reached after the whole sequence.
    pub reached: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionCover {
    /// ε first, then canonical order.
    pub entries: Vec<CoverEntry>,
    /// States not reachable from the initial state; their transitions are
    /// left out of the cover.
    pub unreachable: Vec<String>,
}

impl TransitionCover {
    pub fn sequences(&self) -> Vec<InputSequence> {
        self.entries.iter().map(|e| e.sequence.clone()).collect()
    }
}

/// Shortest access sequence for every reachable state, ties broken by
/// trigger order.
pub fn access_sequences(model: &EnforcerModel) -> BTreeMap<String, InputSequence> {
    let mut access = BTreeMap::new();
    access.insert(model.initial().to_string(), Vec::new());
    let mut queue = VecDeque::from([model.initial().to_string()]);
    while let Some(state) = queue.pop_front() {
        let prefix = access[&state].clone();
        for id in model.outgoing(&state) {
            let t = &model.transitions()[id];
            if !access.contains_key(&t.to) {
                let mut seq = prefix.clone();
                seq.push(t.trigger.clone());
                access.insert(t.to.clone(), seq);
                queue.push_back(t.to.clone());
            }
        }
    }
    access
}

pub fn transition_cover(model: &EnforcerModel) -> TransitionCover {
    let access = access_sequences(model);
    let mut entries = vec![CoverEntry {
        sequence: Vec::new(),
        transition: None,
        reached: model.initial().to_string(),
    }];
    let mut rest: Vec<CoverEntry> = Vec::new();
    for (state, prefix) in &access {
        for id in model.outgoing(state) {
            let t = &model.transitions()[id];
            let mut sequence = prefix.clone();
            sequence.push(t.trigger.clone());
            rest.push(CoverEntry {
                sequence,
                transition: Some(id),
                reached: t.to.clone(),
            });
        }
    }
    rest.sort_by(|a, b| canonical_cmp(&a.sequence, &b.sequence));
    entries.extend(rest);
    let unreachable = model
        .states()
        .iter()
        .filter(|s| !access.contains_key(*s))
        .cloned()
        .collect();
    TransitionCover {
        entries,
        unreachable,
    }
}

/// Shortest input sequence, enabled from both states, on which the two
/// states produce different output sequences. Searches sequences of length
/// up to the number of states.
///
/// Along any sequence whose outputs agreed so far, the whole outputs differ
/// exactly when the last step's outputs differ, so a breadth-first search
/// over state pairs finds the shortest separating sequence. Expanding inputs
/// in symbol order makes it the lexicographically least among those.
pub fn distinguishable(model: &EnforcerModel, si: &str, sj: &str) -> Option<InputSequence> {
    if si == sj {
        return None;
    }
    let bound = model.states().len();
    let mut visited = BTreeSet::from([(si.to_string(), sj.to_string())]);
    let mut queue = VecDeque::from([(si.to_string(), sj.to_string(), Vec::new())]);
    while let Some((a, b, prefix)) = queue.pop_front() {
        if prefix.len() >= bound {
            continue;
        }
        for id in model.outgoing(&a) {
            let ta = &model.transitions()[id];
            let Some(tb) = model.successor(&b, &ta.trigger) else {
                continue;
            };
            let mut seq: InputSequence = prefix.clone();
            seq.push(ta.trigger.clone());
            if ta.emissions != tb.emissions {
                return Some(seq);
            }
            if visited.insert((ta.to.clone(), tb.to.clone())) {
                queue.push_back((ta.to.clone(), tb.to.clone(), seq));
            }
        }
    }
    None
}

/// Shortest prefix of `seq` enabled from both states whose outputs differ.
fn separating_prefix(
    model: &EnforcerModel,
    si: &str,
    sj: &str,
    seq: &[EventSymbol],
) -> Option<usize> {
    let (mut a, mut b) = (si, sj);
    for (i, input) in seq.iter().enumerate() {
        let (ta, tb) = (model.successor(a, input)?, model.successor(b, input)?);
        if ta.emissions != tb.emissions {
            return Some(i + 1);
        }
        a = &ta.to;
        b = &tb.to;
    }
    None
}

/// Pair of states together with the common prefix that separates them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairWitness {
    pub left: String,
    pub right: String,
    pub prefix: InputSequence,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SeparatingFamilies {
    /// Family of every state, each sorted canonically.
    pub families: BTreeMap<String, Vec<InputSequence>>,
    pub witnesses: Vec<PairWitness>,
    /// Pairs with no separating sequence within the search bound.
    pub indistinguishable: Vec<(String, String)>,
}

impl SeparatingFamilies {
    pub fn family(&self, state: &str) -> &[InputSequence] {
        self.families.get(state).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Adds `seq` to a family unless an existing member already extends it;
/// members that are prefixes of `seq` are dropped.
fn add_to_family(family: &mut Vec<InputSequence>, seq: &[EventSymbol]) {
    if family.iter().any(|m| m.starts_with(seq)) {
        return;
    }
    family.retain(|m| !seq.starts_with(m));
    family.push(seq.to_vec());
}

/// Looks for members β ∈ H_i and γ ∈ H_j whose common prefix already
/// separates the pair.
fn existing_witness(
    model: &EnforcerModel,
    si: &str,
    sj: &str,
    hi: &[InputSequence],
    hj: &[InputSequence],
) -> Option<InputSequence> {
    let mut best: Option<InputSequence> = None;
    for beta in hi {
        for gamma in hj {
            let common = beta.iter().zip(gamma).take_while(|(x, y)| x == y).count();
            if let Some(len) = separating_prefix(model, si, sj, &beta[..common]) {
                let alpha = beta[..len].to_vec();
                if best
                    .as_ref()
                    .is_none_or(|b| canonical_cmp(&alpha, b).is_lt())
                {
                    best = Some(alpha);
                }
            }
        }
    }
    best
}

/// Greedy separating families: pairs already separated by shared prefixes
/// are skipped, a member of one family is reused when one of its prefixes
/// separates the pair, and otherwise the shortest separating sequence is
/// added to both families.
pub fn separating_families(model: &EnforcerModel) -> SeparatingFamilies {
    let states: Vec<&String> = model.states().iter().collect();
    let mut families: BTreeMap<String, Vec<InputSequence>> =
        states.iter().map(|s| ((*s).clone(), Vec::new())).collect();
    let mut witnesses = Vec::new();
    let mut indistinguishable = Vec::new();

    for (i, si) in states.iter().enumerate() {
        for sj in &states[i + 1..] {
            let (si, sj) = (si.as_str(), sj.as_str());
            if let Some(prefix) = existing_witness(model, si, sj, &families[si], &families[sj]) {
                witnesses.push(PairWitness {
                    left: si.into(),
                    right: sj.into(),
                    prefix,
                });
                continue;
            }

            // A member of one family whose prefix separates the pair.
            let mut reuse: Option<(InputSequence, &str)> = None;
            for (owner, other) in [(si, sj), (sj, si)] {
                for member in &families[owner] {
                    if let Some(len) = separating_prefix(model, owner, other, member) {
                        let alpha = member[..len].to_vec();
                        if reuse
                            .as_ref()
                            .is_none_or(|(b, _)| canonical_cmp(&alpha, b).is_lt())
                        {
                            reuse = Some((alpha, other));
                        }
                    }
                }
            }
            if let Some((alpha, other)) = reuse {
                add_to_family(families.get_mut(other).unwrap(), &alpha);
                witnesses.push(PairWitness {
                    left: si.into(),
                    right: sj.into(),
                    prefix: alpha,
                });
                continue;
            }

            match distinguishable(model, si, sj) {
                Some(gamma) => {
                    add_to_family(families.get_mut(si).unwrap(), &gamma);
                    add_to_family(families.get_mut(sj).unwrap(), &gamma);
                    witnesses.push(PairWitness {
                        left: si.into(),
                        right: sj.into(),
                        prefix: gamma,
                    });
                }
                None => indistinguishable.push((si.to_string(), sj.to_string())),
            }
        }
    }
    for family in families.values_mut() {
        family.sort_by(|a, b| canonical_cmp(a, b));
    }
    SeparatingFamilies {
        families,
        witnesses,
        indistinguishable,
    }
}

/// Where a test sequence came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    /// Member of the transition cover.
    pub cover: InputSequence,
    /// Transition covered by the last input of `cover`, rendered
    /// `from -trigger-> to`; absent for ε.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<String>,
    /// State reached by `cover`.
    pub state: String,
    /// Member of the state's separating family appended to `cover`.
    pub separator: InputSequence,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestSequence {
    #[serde(rename = "sequence")]
    pub events: InputSequence,
    pub provenance: Provenance,
}

impl TestSequence {
    pub fn label(&self) -> String {
        format_sequence(&self.events)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HsiSuite {
    pub cover: TransitionCover,
    pub families: SeparatingFamilies,
    pub sequences: Vec<TestSequence>,
}

impl HsiSuite {
    /// Human-readable warnings about the derivation.
    pub fn diagnostics(&self) -> Vec<String> {
        let mut out = Vec::new();
        for s in &self.cover.unreachable {
            out.push(format!(
                "state `{s}` is unreachable; its transitions are not covered"
            ));
        }
        for (a, b) in &self.families.indistinguishable {
            out.push(format!("states `{a}` and `{b}` cannot be distinguished"));
        }
        out
    }
}

/// Concatenates each cover member with the family of the state it reaches.
/// A member whose family is empty is kept as is, except ε.
pub fn concatenate(
    model: &EnforcerModel,
    cover: &TransitionCover,
    families: &SeparatingFamilies,
) -> Vec<TestSequence> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for entry in &cover.entries {
        let transition = entry.transition.map(|id| {
            let t = &model.transitions()[id];
            format!("{} -{}-> {}", t.from, t.trigger, t.to)
        });
        let family = families.family(&entry.reached);
        let separators: Vec<&[EventSymbol]> = if family.is_empty() {
            vec![&[]]
        } else {
            family.iter().map(Vec::as_slice).collect()
        };
        for sep in separators {
            let mut events = entry.sequence.clone();
            events.extend_from_slice(sep);
            if events.is_empty() || !seen.insert(events.clone()) {
                continue;
            }
            out.push(TestSequence {
                events,
                provenance: Provenance {
                    cover: entry.sequence.clone(),
                    transition: transition.clone(),
                    state: entry.reached.clone(),
                    separator: sep.to_vec(),
                },
            });
        }
    }
    out.sort_by(|a, b| canonical_cmp(&a.events, &b.events));
    out
}

pub fn derive(model: &EnforcerModel) -> HsiSuite {
    let cover = transition_cover(model);
    let families = separating_families(model);
    let sequences = concatenate(model, &cover, &families);
    HsiSuite {
        cover,
        families,
        sequences,
    }
}

/// The test sequences to cover, in canonical order.
pub fn generate_sequences(model: &EnforcerModel) -> Vec<TestSequence> {
    derive(model).sequences
}
