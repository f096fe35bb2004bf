//! Concrete test generation.
//!
//! For every sequence of enforcer inputs, the ripping model is searched for
//! the shortest UI action paths whose monitored events are exactly that
//! sequence. Candidates are replayed on the application until one really
//! produces the sequence, and the winner gets an oracle derived from the
//! enforcer model: transparent when the enforcer forwards every input
//! unchanged, actual otherwise.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automaton::{format_sequence, EnforcerModel, EventSymbol, RunError};
use crate::hsi::{InputSequence, Provenance, TestSequence};
use crate::ripping::RippingModel;
use crate::sut::{StateDigest, SutDriver, UiAction};

/// Candidate paths tried per sequence unless configured otherwise.
pub const DEFAULT_CANDIDATES: usize = 10;

#[derive(Debug, Error)]
pub enum TestgenError {
    #[error("sequence `{sequence}` is not accepted by the enforcer model: {source}")]
    NotEnabled {
        sequence: String,
        #[source]
        source: RunError,
    },
    #[error("malformed suite entry for `{sequence}`: {reason}")]
    Malformed { sequence: String, reason: String },
    #[error("invalid suite JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot access suite file: {0}")]
    Io(#[from] std::io::Error),
}

/// Which differential oracle a test carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Oracle {
    /// Trajectories with and without the enforcer must be identical.
    Transparent,
    /// The enforcer intervenes at input `divergence_index` (1-based):
    /// trajectories must agree before it and are expected to differ after.
    Actual { divergence_index: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConcreteTestCase {
    pub actions: Vec<UiAction>,
    pub target: InputSequence,
    pub oracle: Oracle,
    /// Slice of `target` produced by each action.
    pub action_events: Vec<Vec<EventSymbol>>,
}

impl ConcreteTestCase {
    /// 0-based index of the action during which the enforcer is expected
    /// to intervene, for actual-enforcement tests.
    pub fn boundary_action(&self) -> Option<usize> {
        let Oracle::Actual { divergence_index } = self.oracle else {
            return None;
        };
        let v = divergence_index.min(self.target.len()).max(1);
        let mut seen = 0;
        for (i, slice) in self.action_events.iter().enumerate() {
            seen += slice.len();
            if seen >= v {
                return Some(i);
            }
        }
        self.actions.len().checked_sub(1)
    }
}

/// Labels of the symbols the enforcer consumes; the monitor records only
/// these.
pub fn monitored_alphabet(enf: &EnforcerModel) -> BTreeSet<String> {
    enf.input_names()
}

fn filter_events<'a>(
    events: &'a [String],
    alphabet: &'a BTreeSet<String>,
) -> impl Iterator<Item = &'a String> + 'a {
    events.iter().filter(move |e| alphabet.contains(*e))
}

/// Product of the ripping model with positions `0..=k` in the target.
struct ProductGraph {
    initial: usize,
    k: usize,
    n_states: usize,
    // Node id = state * (k + 1) + position.
    edges: Vec<Vec<(UiAction, usize)>>,
}

impl ProductGraph {
    fn new(model: &RippingModel, target: &[&str], alphabet: &BTreeSet<String>) -> Self {
        let index: HashMap<&StateDigest, usize> = model
            .states
            .iter()
            .enumerate()
            .map(|(i, s)| (&s.digest, i))
            .collect();
        let k = target.len();
        let width = k + 1;
        let n_states = model.states.len();
        let mut edges = vec![Vec::new(); n_states * width];
        for t in &model.transitions {
            let (Some(&u), Some(&v)) = (index.get(&t.from), index.get(&t.to)) else {
                continue;
            };
            let label: Vec<&str> = filter_events(&t.events, alphabet)
                .map(String::as_str)
                .collect();
            for j in 0..=k {
                if j + label.len() <= k && target[j..j + label.len()] == label[..] {
                    edges[u * width + j].push((t.action.clone(), v * width + j + label.len()));
                }
            }
        }
        for out in &mut edges {
            out.sort();
            out.dedup();
        }
        Self {
            initial: index[&model.initial] * width,
            k,
            n_states,
            edges,
        }
    }

    fn position(&self, node: usize) -> usize {
        node % (self.k + 1)
    }

    fn is_target(&self, node: usize) -> bool {
        self.position(node) == self.k
    }

    /// `reach[r][x]`: a target is reachable from `x` in exactly `r` steps.
    fn exact_reach(&self, max_len: usize) -> Vec<Vec<bool>> {
        let nodes = self.edges.len();
        let mut reach = vec![(0..nodes).map(|x| self.is_target(x)).collect::<Vec<_>>()];
        for r in 1..=max_len {
            let prev = &reach[r - 1];
            let row = (0..nodes)
                .map(|x| self.edges[x].iter().any(|&(_, y)| prev[y]))
                .collect();
            reach.push(row);
        }
        reach
    }
}

/// Path-length bound of the search.
pub fn search_bound(model: &RippingModel) -> usize {
    2 * model.states.len()
}

/// Up to `n` shortest action paths from the initial state whose monitored
/// events, restricted to `alphabet`, are exactly `target`. Paths of equal
/// length come in lexicographic action order.
pub fn generate_event_paths(
    model: &RippingModel,
    target: &[EventSymbol],
    n: usize,
    alphabet: &BTreeSet<String>,
) -> Vec<Vec<UiAction>> {
    let names: Vec<&str> = target.iter().map(EventSymbol::name).collect();
    if n == 0 || model.states.is_empty() {
        return Vec::new();
    }
    let graph = ProductGraph::new(model, &names, alphabet);
    let bound = search_bound(model);
    let reach = graph.exact_reach(bound);

    let mut found = Vec::new();
    for len in 0..=bound {
        if !reach[len][graph.initial] {
            continue;
        }
        let mut path = Vec::with_capacity(len);
        enumerate_paths(
            &graph,
            &reach,
            BTreeSet::from([graph.initial]),
            len,
            &mut path,
            &mut found,
            n,
        );
        if found.len() >= n {
            break;
        }
    }
    found
}

/// Depth-first enumeration over sets of product nodes, so that action
/// sequences are produced once each and in lexicographic order even when
/// the model holds several transitions for one (state, action).
fn enumerate_paths(
    graph: &ProductGraph,
    reach: &[Vec<bool>],
    nodes: BTreeSet<usize>,
    remaining: usize,
    path: &mut Vec<UiAction>,
    found: &mut Vec<Vec<UiAction>>,
    n: usize,
) {
    if found.len() >= n {
        return;
    }
    if remaining == 0 {
        found.push(path.clone());
        return;
    }
    let mut by_action: BTreeMap<&UiAction, BTreeSet<usize>> = BTreeMap::new();
    for &x in &nodes {
        for (action, y) in &graph.edges[x] {
            if reach[remaining - 1][*y] {
                by_action.entry(action).or_default().insert(*y);
            }
        }
    }
    for (action, next) in by_action {
        path.push(action.clone());
        enumerate_paths(graph, reach, next, remaining - 1, path, found, n);
        path.pop();
        if found.len() >= n {
            return;
        }
    }
}

/// How far a target can be realized in the ripping model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Realizability {
    /// Length of the longest realizable prefix.
    pub prefix: usize,
    /// Distinct monitored labels seen right after that prefix.
    pub next_labels: BTreeSet<Vec<String>>,
}

pub fn realizable_prefix(
    model: &RippingModel,
    target: &[EventSymbol],
    alphabet: &BTreeSet<String>,
) -> Realizability {
    let names: Vec<&str> = target.iter().map(EventSymbol::name).collect();
    if model.states.is_empty() {
        return Realizability {
            prefix: 0,
            next_labels: BTreeSet::new(),
        };
    }
    let graph = ProductGraph::new(model, &names, alphabet);
    let mut seen = vec![false; graph.edges.len()];
    seen[graph.initial] = true;
    let mut queue = VecDeque::from([graph.initial]);
    while let Some(x) = queue.pop_front() {
        for &(_, y) in &graph.edges[x] {
            if !seen[y] {
                seen[y] = true;
                queue.push_back(y);
            }
        }
    }
    let prefix = (0..graph.edges.len())
        .filter(|&x| seen[x])
        .map(|x| graph.position(x))
        .max()
        .unwrap_or(0);

    let width = graph.k + 1;
    let at_prefix: BTreeSet<usize> = (0..graph.n_states)
        .filter(|s| seen[s * width + prefix])
        .collect();
    let mut next_labels = BTreeSet::new();
    for t in &model.transitions {
        let Some(u) = model.states.iter().position(|s| s.digest == t.from) else {
            continue;
        };
        if !at_prefix.contains(&u) {
            continue;
        }
        let label: Vec<String> = filter_events(&t.events, alphabet).cloned().collect();
        if !label.is_empty() {
            next_labels.insert(label);
        }
    }
    Realizability {
        prefix,
        next_labels,
    }
}

fn explain(target: &[EventSymbol], r: &Realizability, bound: usize) -> String {
    let observed = if r.next_labels.is_empty() {
        "no further monitored events".to_string()
    } else {
        r.next_labels
            .iter()
            .map(|l| format!("[{}]", l.join(", ")))
            .collect::<Vec<_>>()
            .join(" or ")
    };
    if r.prefix == 0 {
        format!(
            "no path emits {} as the first event; paths from the initial state emit {observed}",
            target[0]
        )
    } else if r.prefix == target.len() {
        format!("the sequence is realizable only by paths longer than {bound} actions")
    } else {
        format!(
            "only the prefix `{}` ({} of {} events) is realizable; after it the model emits {observed} instead of {}",
            format_sequence(&target[..r.prefix]),
            r.prefix,
            target.len(),
            target[r.prefix]
        )
    }
}

/// One replayed action.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayStep {
    pub action: UiAction,
    pub state: StateDigest,
    pub events: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayOutcome {
    pub covered: bool,
    pub steps: Vec<ReplayStep>,
    /// Set when an action could not be executed.
    pub diagnostic: Option<String>,
}

impl ReplayOutcome {
    pub fn monitored_events(&self) -> Vec<String> {
        self.steps.iter().flat_map(|s| s.events.clone()).collect()
    }
}

/// Resets the driver, performs `actions` and checks that the monitored
/// events are exactly `target`.
pub fn run_test_case<D: SutDriver + ?Sized>(
    sut: &mut D,
    actions: &[UiAction],
    target: &[EventSymbol],
    alphabet: &BTreeSet<String>,
) -> ReplayOutcome {
    sut.reset();
    let mut steps = Vec::with_capacity(actions.len());
    for (i, action) in actions.iter().enumerate() {
        match sut.perform(action) {
            Ok(p) => steps.push(ReplayStep {
                action: action.clone(),
                state: sut.digest(&p.state),
                events: filter_events(&p.events, alphabet).cloned().collect(),
            }),
            Err(e) => {
                return ReplayOutcome {
                    covered: false,
                    steps,
                    diagnostic: Some(format!("action {} ({action}): {e}", i + 1)),
                }
            }
        }
    }
    let observed: Vec<&str> = steps
        .iter()
        .flat_map(|s| s.events.iter().map(String::as_str))
        .collect();
    let expected: Vec<&str> = target.iter().map(EventSymbol::name).collect();
    ReplayOutcome {
        covered: observed == expected,
        steps,
        diagnostic: None,
    }
}

/// Classifies `target` against the enforcer model.
pub fn classify(target: &[EventSymbol], model: &EnforcerModel) -> Result<Oracle, TestgenError> {
    let outputs = model
        .run(target)
        .map_err(|source| TestgenError::NotEnabled {
            sequence: format_sequence(target),
            source,
        })?;
    let k = target.len();
    let m = outputs.len();
    let first_diff =
        (0..k.max(m)).find(|&i| i >= k || i >= m || !target[i].same_label(&outputs[i]));
    Ok(match first_diff {
        None => Oracle::Transparent,
        Some(i) => Oracle::Actual {
            divergence_index: i + 1,
        },
    })
}

/// Wraps a covering action path into a test with its oracle. The per-action
/// slices come from the replay and must concatenate to `target`.
pub fn attach_oracle(
    actions: Vec<UiAction>,
    target: &[EventSymbol],
    model: &EnforcerModel,
    per_action_events: &[Vec<String>],
) -> Result<ConcreteTestCase, TestgenError> {
    let oracle = classify(target, model)?;
    let malformed = |reason: &str| TestgenError::Malformed {
        sequence: format_sequence(target),
        reason: reason.to_string(),
    };
    if per_action_events.len() != actions.len() {
        return Err(malformed("one event slice per action is required"));
    }
    let mut action_events = Vec::with_capacity(actions.len());
    let mut pos = 0;
    for slice in per_action_events {
        let end = pos + slice.len();
        if end > target.len()
            || !slice
                .iter()
                .zip(&target[pos..end])
                .all(|(e, s)| e == s.name())
        {
            return Err(malformed("event slices do not concatenate to the sequence"));
        }
        action_events.push(target[pos..end].to_vec());
        pos = end;
    }
    if pos != target.len() {
        return Err(malformed("event slices do not concatenate to the sequence"));
    }
    Ok(ConcreteTestCase {
        actions,
        target: target.to_vec(),
        oracle,
        action_events,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Coverage {
    Covered {
        test: ConcreteTestCase,
        replay: Vec<ReplayStep>,
    },
    Infeasible {
        reason: String,
        realizable_prefix: usize,
    },
    NotFound {
        candidates_tried: usize,
        diagnostics: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageEntry {
    pub sequence: TestSequence,
    pub coverage: Coverage,
}

impl CoverageEntry {
    pub fn status(&self) -> &'static str {
        match self.coverage {
            Coverage::Covered { .. } => "covered",
            Coverage::Infeasible { .. } => "infeasible",
            Coverage::NotFound { .. } => "not_found",
        }
    }

    pub fn test(&self) -> Option<&ConcreteTestCase> {
        match &self.coverage {
            Coverage::Covered { test, .. } => Some(test),
            _ => None,
        }
    }
}

/// Outcome of test generation, one entry per input sequence.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CoverageReport {
    pub entries: Vec<CoverageEntry>,
}

impl CoverageReport {
    pub fn covered(&self) -> impl Iterator<Item = (&TestSequence, &ConcreteTestCase)> {
        self.entries
            .iter()
            .filter_map(|e| e.test().map(|t| (&e.sequence, t)))
    }

    pub fn count(&self, status: &str) -> usize {
        self.entries.iter().filter(|e| e.status() == status).count()
    }

    pub fn to_json(&self) -> String {
        let docs: Vec<SuiteEntryDocument> = self.entries.iter().map(Into::into).collect();
        serde_json::to_string_pretty(&docs).expect("suites always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, TestgenError> {
        let docs: Vec<SuiteEntryDocument> = serde_json::from_str(text)?;
        let entries = docs
            .into_iter()
            .map(CoverageEntry::try_from)
            .collect::<Result<_, _>>()?;
        Ok(Self { entries })
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, TestgenError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Runs the generation loop: search candidates, replay them in order until
/// one covers the sequence, then attach the oracle. `app` builds a fresh
/// driver for every replay.
pub fn generate_suite<D, F>(
    mut app: F,
    model: &RippingModel,
    enf: &EnforcerModel,
    sequences: &[TestSequence],
    n: usize,
) -> Result<CoverageReport, TestgenError>
where
    D: SutDriver,
    F: FnMut() -> D,
{
    let alphabet = monitored_alphabet(enf);
    let mut entries = Vec::with_capacity(sequences.len());
    for ts in sequences {
        let candidates = generate_event_paths(model, &ts.events, n.max(1), &alphabet);
        if candidates.is_empty() {
            let r = realizable_prefix(model, &ts.events, &alphabet);
            entries.push(CoverageEntry {
                sequence: ts.clone(),
                coverage: Coverage::Infeasible {
                    reason: explain(&ts.events, &r, search_bound(model)),
                    realizable_prefix: r.prefix,
                },
            });
            continue;
        }

        let mut diagnostics = Vec::new();
        let mut covered = None;
        for actions in &candidates {
            let mut sut = app();
            let outcome = run_test_case(&mut sut, actions, &ts.events, &alphabet);
            if outcome.covered {
                let slices: Vec<Vec<String>> =
                    outcome.steps.iter().map(|s| s.events.clone()).collect();
                let test = attach_oracle(actions.clone(), &ts.events, enf, &slices)?;
                covered = Some(Coverage::Covered {
                    test,
                    replay: outcome.steps,
                });
                break;
            }
            let emitted = outcome.monitored_events().join(", ");
            diagnostics.push(outcome.diagnostic.unwrap_or_else(|| {
                format!(
                    "[{}] emitted [{}]",
                    actions
                        .iter()
                        .map(ToString::to_string)
                        .collect::<Vec<_>>()
                        .join(", "),
                    emitted
                )
            }));
        }
        entries.push(CoverageEntry {
            sequence: ts.clone(),
            coverage: covered.unwrap_or(Coverage::NotFound {
                candidates_tried: candidates.len(),
                diagnostics,
            }),
        });
    }
    Ok(CoverageReport { entries })
}

/// Flat JSON form of a suite entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteEntryDocument {
    pub sequence: InputSequence,
    pub provenance: Provenance,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actions: Option<Vec<UiAction>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub divergence_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action_events: Option<Vec<Vec<EventSymbol>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replay: Option<Vec<ReplayStep>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub realizable_prefix: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates_tried: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

impl From<&CoverageEntry> for SuiteEntryDocument {
    fn from(e: &CoverageEntry) -> Self {
        let mut doc = SuiteEntryDocument {
            sequence: e.sequence.events.clone(),
            provenance: e.sequence.provenance.clone(),
            status: e.status().to_string(),
            actions: None,
            oracle: None,
            divergence_index: None,
            action_events: None,
            replay: None,
            reason: None,
            realizable_prefix: None,
            candidates_tried: None,
            diagnostics: Vec::new(),
        };
        match &e.coverage {
            Coverage::Covered { test, replay } => {
                doc.actions = Some(test.actions.clone());
                match test.oracle {
                    Oracle::Transparent => doc.oracle = Some("transparent".into()),
                    Oracle::Actual { divergence_index } => {
                        doc.oracle = Some("actual".into());
                        doc.divergence_index = Some(divergence_index);
                    }
                }
                doc.action_events = Some(test.action_events.clone());
                doc.replay = Some(replay.clone());
            }
            Coverage::Infeasible {
                reason,
                realizable_prefix,
            } => {
                doc.reason = Some(reason.clone());
                doc.realizable_prefix = Some(*realizable_prefix);
            }
            Coverage::NotFound {
                candidates_tried,
                diagnostics,
            } => {
                doc.candidates_tried = Some(*candidates_tried);
                doc.diagnostics = diagnostics.clone();
            }
        }
        doc
    }
}

impl TryFrom<SuiteEntryDocument> for CoverageEntry {
    type Error = TestgenError;

    fn try_from(doc: SuiteEntryDocument) -> Result<Self, Self::Error> {
        let malformed = |reason: &str| TestgenError::Malformed {
            sequence: format_sequence(&doc.sequence),
            reason: reason.to_string(),
        };
        let coverage = match doc.status.as_str() {
            "covered" => {
                let actions = doc
                    .actions
                    .clone()
                    .ok_or_else(|| malformed("missing actions"))?;
                let oracle = match (doc.oracle.as_deref(), doc.divergence_index) {
                    (Some("transparent"), None) => Oracle::Transparent,
                    (Some("actual"), Some(v)) if v >= 1 => Oracle::Actual {
                        divergence_index: v,
                    },
                    _ => return Err(malformed("invalid oracle")),
                };
                let action_events = doc
                    .action_events
                    .clone()
                    .ok_or_else(|| malformed("missing action_events"))?;
                if action_events.len() != actions.len() || action_events.concat() != doc.sequence {
                    return Err(malformed(
                        "action_events do not concatenate to the sequence",
                    ));
                }
                Coverage::Covered {
                    test: ConcreteTestCase {
                        actions,
                        target: doc.sequence.clone(),
                        oracle,
                        action_events,
                    },
                    replay: doc.replay.clone().unwrap_or_default(),
                }
            }
            "infeasible" => Coverage::Infeasible {
                reason: doc.reason.clone().unwrap_or_default(),
                realizable_prefix: doc.realizable_prefix.unwrap_or(0),
            },
            "not_found" => Coverage::NotFound {
                candidates_tried: doc.candidates_tried.unwrap_or(0),
                diagnostics: doc.diagnostics.clone(),
            },
            other => return Err(malformed(&format!("unknown status `{other}`"))),
        };
        Ok(CoverageEntry {
            sequence: TestSequence {
                events: doc.sequence,
                provenance: doc.provenance,
            },
            coverage,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::camera_release_enforcer;
    use crate::hsi::generate_sequences;
    use crate::ripping::{rip, RipConfig, RipTransition, RippedState};
    use crate::sut::{fixture, GuiState, View, ACTIVITY_PAUSE, CAMERA_OPEN, CAMERA_RELEASE};

    fn req(names: &[&str]) -> Vec<EventSymbol> {
        names.iter().map(|n| EventSymbol::request(n)).collect()
    }

    fn alphabet() -> BTreeSet<String> {
        monitored_alphabet(&camera_release_enforcer())
    }

    fn ripped(name: &str) -> RippingModel {
        rip(
            &mut fixture(name).unwrap().driver(),
            &RipConfig::with_budget(750),
        )
        .unwrap()
    }

    fn digest(n: u8) -> StateDigest {
        GuiState::new(vec![View::new(&format!("v{n}"), [])])
            .unwrap()
            .digest(&BTreeSet::new())
    }

    /// Excerpt of a camera app model: the launcher opens a start screen
    /// that acquires the camera, a tap reaches the main activity, and Back
    /// from there releases the camera and pauses the activity.
    fn excerpt() -> RippingModel {
        let (launcher, start, main) = (digest(0), digest(1), digest(2));
        let t = |from: &StateDigest, a: UiAction, ev: &[&str], to: &StateDigest| RipTransition {
            from: from.clone(),
            action: a,
            events: ev.iter().map(|e| e.to_string()).collect(),
            to: to.clone(),
        };
        RippingModel {
            states: [&launcher, &start, &main]
                .iter()
                .map(|d| RippedState {
                    digest: (*d).clone(),
                    views: GuiState::default(),
                })
                .collect(),
            initial: launcher.clone(),
            transitions: vec![
                t(&launcher, UiAction::touch("v1"), &[CAMERA_OPEN], &start),
                t(&start, UiAction::touch("v2"), &[], &main),
                t(&start, UiAction::long_touch("v2"), &[], &start),
                t(
                    &main,
                    UiAction::back(),
                    &[CAMERA_RELEASE, ACTIVITY_PAUSE],
                    &launcher,
                ),
            ],
            meta: Default::default(),
        }
    }

    #[test]
    fn finds_paths_in_excerpt() {
        let ts = req(&[CAMERA_OPEN, CAMERA_RELEASE, ACTIVITY_PAUSE]);
        let paths = generate_event_paths(&excerpt(), &ts, 10, &alphabet());
        let direct = vec![
            UiAction::touch("v1"),
            UiAction::touch("v2"),
            UiAction::back(),
        ];
        assert_eq!(paths[0], direct);
        // The self-loop yields longer detours, shortest first.
        assert_eq!(
            paths[1],
            vec![
                UiAction::touch("v1"),
                UiAction::long_touch("v2"),
                UiAction::touch("v2"),
                UiAction::back()
            ]
        );
        assert!(paths.windows(2).all(|w| w[0].len() <= w[1].len()));
        let one = generate_event_paths(&excerpt(), &ts, 1, &alphabet());
        assert_eq!(one.len(), 1);
    }

    #[test]
    fn unrealizable_labels_give_nothing() {
        let ts = req(&[ACTIVITY_PAUSE]);
        assert!(generate_event_paths(&excerpt(), &ts, 10, &alphabet()).is_empty());
        let r = realizable_prefix(&excerpt(), &ts, &alphabet());
        assert_eq!(r.prefix, 0);
        assert_eq!(
            r.next_labels,
            BTreeSet::from([vec![CAMERA_OPEN.to_string()]])
        );
    }

    #[test]
    fn pause_alone_is_infeasible_on_faulty_app() {
        let model = ripped("foocam_f");
        assert!(generate_event_paths(&model, &req(&[ACTIVITY_PAUSE]), 10, &alphabet()).is_empty());
    }

    #[test]
    fn replay_on_both_variants() {
        let ts = req(&[CAMERA_OPEN, ACTIVITY_PAUSE]);
        let paths = generate_event_paths(&ripped("foocam_f"), &ts, 10, &alphabet());
        assert!(!paths.is_empty());
        let mut f = fixture("foocam_f").unwrap().driver();
        let out = run_test_case(&mut f, &paths[0], &ts, &alphabet());
        assert!(out.covered);
        assert_eq!(out.steps.len(), paths[0].len());

        let mut c = fixture("foocam_c").unwrap().driver();
        let out = run_test_case(&mut c, &paths[0], &ts, &alphabet());
        assert!(!out.covered);
        assert!(out.monitored_events().contains(&CAMERA_RELEASE.to_string()));
    }

    #[test]
    fn replay_without_events() {
        let mut app = fixture("foocam_c").unwrap().driver();
        let actions = [UiAction::long_touch("app_icon")];
        assert!(run_test_case(&mut app, &actions, &[], &alphabet()).covered);
        assert!(!run_test_case(&mut app, &actions, &req(&[CAMERA_OPEN]), &alphabet()).covered);
    }

    #[test]
    fn replay_aborts_on_missing_view() {
        let mut app = fixture("foocam_c").unwrap().driver();
        let out = run_test_case(
            &mut app,
            &[UiAction::touch("settings")],
            &req(&[CAMERA_OPEN]),
            &alphabet(),
        );
        assert!(!out.covered);
        assert!(out.diagnostic.is_some());
    }

    #[test]
    fn oracle_kinds() {
        let m = camera_release_enforcer();
        assert_eq!(
            classify(&req(&[CAMERA_OPEN, CAMERA_RELEASE, ACTIVITY_PAUSE]), &m).unwrap(),
            Oracle::Transparent
        );
        assert_eq!(
            classify(&req(&[CAMERA_OPEN, ACTIVITY_PAUSE]), &m).unwrap(),
            Oracle::Actual {
                divergence_index: 2
            }
        );
        assert!(classify(&req(&[CAMERA_RELEASE]), &m).is_err());
    }

    #[test]
    fn attach_oracle_checks_slices() {
        let m = camera_release_enforcer();
        let ts = req(&[CAMERA_OPEN, ACTIVITY_PAUSE]);
        let actions = vec![UiAction::touch("app_icon"), UiAction::back()];
        let tc = attach_oracle(
            actions.clone(),
            &ts,
            &m,
            &[vec![CAMERA_OPEN.into()], vec![ACTIVITY_PAUSE.into()]],
        )
        .unwrap();
        assert_eq!(tc.boundary_action(), Some(1));
        assert!(attach_oracle(actions, &ts, &m, &[vec![CAMERA_OPEN.into()], vec![]]).is_err());
    }

    #[test]
    fn suite_on_both_variants() {
        let enf = camera_release_enforcer();
        let seqs = generate_sequences(&enf);
        for (name, covered) in [("foocam_c", 1), ("foocam_f", 2)] {
            let fx = fixture(name).unwrap();
            let model = ripped(name);
            let report =
                generate_suite(|| fx.driver(), &model, &enf, &seqs, DEFAULT_CANDIDATES).unwrap();
            assert_eq!(report.entries.len(), 5);
            assert_eq!(report.count("covered"), covered, "{name}");
            assert_eq!(report.count("infeasible"), 5 - covered, "{name}");
            let back = CoverageReport::from_json(&report.to_json()).unwrap();
            assert_eq!(back, report);
        }
    }

    #[test]
    fn empty_suite() {
        let fx = fixture("foocam_c").unwrap();
        let report = generate_suite(
            || fx.driver(),
            &ripped("foocam_c"),
            &camera_release_enforcer(),
            &[],
            10,
        )
        .unwrap();
        assert!(report.entries.is_empty());
    }
}
