//! Differential execution of generated tests.
//!
//! Each test runs on a fresh application and on a fresh application with
//! the enforcer deployed. The GUI states reached after every action are
//! compared with the same digests used while ripping.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automaton::{format_sequence, EnforcerModel};
use crate::hsi::InputSequence;
use crate::sut::{
    attach_enforcer, GuiState, Interceptable, StateDigest, SutDriver, SutError, TracePredicate,
    UiAction,
};
use crate::testgen::{ConcreteTestCase, CoverageReport, Oracle};

#[derive(Debug, Error)]
pub enum DiffError {
    #[error("replay aborted on both sides: {plain}; {enforced}")]
    ReplayAborted { plain: String, enforced: String },
    #[error("cannot deploy the enforcer: {0}")]
    Deploy(#[source] SutError),
    #[error("invalid verdict JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot access verdict file: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyChange {
    pub view: String,
    pub property: String,
    pub left: Option<String>,
    pub right: Option<String>,
}

/// View-level difference between two GUI states.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateDiff {
    /// Views only in the right state.
    pub added: Vec<String>,
    /// Views only in the left state.
    pub removed: Vec<String>,
    pub changed: Vec<PropertyChange>,
}

/// `None` when the digests agree, otherwise what differs.
pub fn compare_states(
    left: &GuiState,
    right: &GuiState,
    volatile: &BTreeSet<String>,
) -> Option<StateDiff> {
    if left.digest(volatile) == right.digest(volatile) {
        return None;
    }
    let mut diff = StateDiff::default();
    for v in left.views() {
        match right.view(&v.id) {
            None => diff.removed.push(v.id.clone()),
            Some(w) => {
                let keys: BTreeSet<&String> = v
                    .properties
                    .keys()
                    .chain(w.properties.keys())
                    .filter(|k| !volatile.contains(*k))
                    .collect();
                for k in keys {
                    let (a, b) = (v.properties.get(k), w.properties.get(k));
                    if a != b {
                        diff.changed.push(PropertyChange {
                            view: v.id.clone(),
                            property: k.clone(),
                            left: a.cloned(),
                            right: b.cloned(),
                        });
                    }
                }
            }
        }
    }
    for w in right.views() {
        if left.view(&w.id).is_none() {
            diff.added.push(w.id.clone());
        }
    }
    Some(diff)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub action: UiAction,
    pub digest: StateDigest,
    pub state: GuiState,
    pub events: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    Warning,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Pass => "pass",
            Outcome::Fail => "fail",
            Outcome::Warning => "warning",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub summary: String,
    /// 1-based action after which the states first differ.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_difference: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_diff: Option<StateDiff>,
    /// 1-based action during which the enforcer should intervene.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_action: Option<usize>,
    pub digests_equal: bool,
    pub event_streams_differ: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub outcome: Outcome,
    pub oracle: OracleLabel,
    pub evidence: Evidence,
    pub plain: Vec<TraceStep>,
    pub enforced: Vec<TraceStep>,
}

/// Serialized oracle kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleLabel {
    Transparent,
    Actual { divergence_index: usize },
}

impl From<Oracle> for OracleLabel {
    fn from(o: Oracle) -> Self {
        match o {
            Oracle::Transparent => OracleLabel::Transparent,
            Oracle::Actual { divergence_index } => OracleLabel::Actual { divergence_index },
        }
    }
}

enum Abort {
    Unavailable(String),
    Enforcer(String),
}

struct SideRun {
    steps: Vec<TraceStep>,
    abort: Option<(usize, Abort)>,
}

fn replay<D: SutDriver + ?Sized>(sut: &mut D, actions: &[UiAction]) -> SideRun {
    sut.reset();
    let mut steps = Vec::with_capacity(actions.len());
    for (i, action) in actions.iter().enumerate() {
        match sut.perform(action) {
            Ok(p) => steps.push(TraceStep {
                action: action.clone(),
                digest: sut.digest(&p.state),
                state: p.state,
                events: p.events,
            }),
            Err(SutError::Enforcer(e)) => {
                return SideRun {
                    steps,
                    abort: Some((i, Abort::Enforcer(e.to_string()))),
                }
            }
            Err(e) => {
                return SideRun {
                    steps,
                    abort: Some((i, Abort::Unavailable(e.to_string()))),
                }
            }
        }
    }
    SideRun { steps, abort: None }
}

fn events_of(steps: &[TraceStep]) -> Vec<&str> {
    steps
        .iter()
        .flat_map(|s| s.events.iter().map(String::as_str))
        .collect()
}

/// Runs `tc` without and with the enforcer `enf` and applies its oracle.
/// `app` must build a fresh driver on each call.
pub fn execute_differential<D, F>(
    tc: &ConcreteTestCase,
    app: F,
    enf: Arc<EnforcerModel>,
) -> Result<Verdict, DiffError>
where
    D: Interceptable,
    F: Fn() -> D,
{
    let mut plain_sut = app();
    let volatile = plain_sut.volatile_properties();
    let plain = replay(&mut plain_sut, &tc.actions);
    let mut enforced_sut = attach_enforcer(app(), enf).map_err(DiffError::Deploy)?;
    let enforced = replay(&mut enforced_sut, &tc.actions);

    let oracle = OracleLabel::from(tc.oracle);
    let streams_differ = events_of(&plain.steps) != events_of(&enforced.steps);
    let boundary = tc.boundary_action();
    let verdict = |outcome, evidence, plain: SideRun, enforced: SideRun| Verdict {
        outcome,
        oracle,
        evidence,
        plain: plain.steps,
        enforced: enforced.steps,
    };

    match (&plain.abort, &enforced.abort) {
        (Some((_, Abort::Unavailable(p))), Some((_, Abort::Unavailable(e)))) => {
            return Err(DiffError::ReplayAborted {
                plain: p.clone(),
                enforced: e.clone(),
            })
        }
        (None, None) => {}
        (p, e) => {
            let summary = match (p, e) {
                (_, Some((i, Abort::Enforcer(msg)))) => format!(
                    "the enforcer does not conform to its model at action {}: {msg}",
                    i + 1
                ),
                (Some((i, Abort::Unavailable(msg))), _) => format!(
                    "replay aborted only without the enforcer at action {}: {msg}",
                    i + 1
                ),
                (_, Some((i, Abort::Unavailable(msg)))) => format!(
                    "replay aborted only with the enforcer at action {}: {msg}",
                    i + 1
                ),
                _ => "replay aborted".to_string(),
            };
            let first = p.as_ref().or(e.as_ref()).map(|(i, _)| i + 1);
            let evidence = Evidence {
                summary,
                first_difference: first,
                state_diff: None,
                boundary_action: boundary.map(|b| b + 1),
                digests_equal: false,
                event_streams_differ: streams_differ,
            };
            return Ok(verdict(Outcome::Fail, evidence, plain, enforced));
        }
    }

    let n = plain.steps.len();
    let differs_at = |i: usize| plain.steps[i].digest != enforced.steps[i].digest;
    let diff_at =
        |i: usize| compare_states(&plain.steps[i].state, &enforced.steps[i].state, &volatile);
    let all_equal = (0..n).all(|i| !differs_at(i));

    let (outcome, evidence) = match tc.oracle {
        Oracle::Transparent => match (0..n).find(|&i| differs_at(i)) {
            None => (
                Outcome::Pass,
                Evidence {
                    summary: "identical states with and without the enforcer".into(),
                    first_difference: None,
                    state_diff: None,
                    boundary_action: None,
                    digests_equal: true,
                    event_streams_differ: streams_differ,
                },
            ),
            Some(i) => (
                Outcome::Fail,
                Evidence {
                    summary: format!(
                        "the enforcer is intrusive: states differ after action {} ({})",
                        i + 1,
                        tc.actions[i]
                    ),
                    first_difference: Some(i + 1),
                    state_diff: diff_at(i),
                    boundary_action: None,
                    digests_equal: false,
                    event_streams_differ: streams_differ,
                },
            ),
        },
        Oracle::Actual { .. } => {
            let b = boundary.unwrap_or(0);
            if let Some(i) = (0..b.min(n)).find(|&i| differs_at(i)) {
                (
                    Outcome::Fail,
                    Evidence {
                        summary: format!(
                            "the enforcer is unexpectedly intrusive: states differ after action {}, before its expected intervention at action {}",
                            i + 1,
                            b + 1
                        ),
                        first_difference: Some(i + 1),
                        state_diff: diff_at(i),
                        boundary_action: Some(b + 1),
                        digests_equal: false,
                        event_streams_differ: streams_differ,
                    },
                )
            } else if let Some(p) = (b..n).find(|&i| differs_at(i)) {
                (
                    Outcome::Pass,
                    Evidence {
                        summary: format!(
                            "the intervention is visible: states differ after action {}",
                            p + 1
                        ),
                        first_difference: Some(p + 1),
                        state_diff: diff_at(p),
                        boundary_action: Some(b + 1),
                        digests_equal: false,
                        event_streams_differ: streams_differ,
                    },
                )
            } else if streams_differ {
                (
                    Outcome::Warning,
                    Evidence {
                        summary: "no post-divergence difference: the enforcer changed the event stream but no GUI state differs".into(),
                        first_difference: None,
                        state_diff: None,
                        boundary_action: Some(b + 1),
                        digests_equal: all_equal,
                        event_streams_differ: true,
                    },
                )
            } else {
                (
                    Outcome::Fail,
                    Evidence {
                        summary:
                            "the enforcer did not intervene: event streams and states are identical"
                                .into(),
                        first_difference: None,
                        state_diff: None,
                        boundary_action: Some(b + 1),
                        digests_equal: all_equal,
                        event_streams_differ: false,
                    },
                )
            }
        }
    };
    Ok(verdict(outcome, evidence, plain, enforced))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyResult {
    pub predicate: String,
    pub plain: bool,
    pub enforced: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteVerdict {
    pub sequence: InputSequence,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Informational policy checks on both event streams.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub policies: Vec<PolicyResult>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub pass: usize,
    pub fail: usize,
    pub warning: usize,
    pub errors: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub counts: Counts,
    pub verdicts: Vec<SuiteVerdict>,
}

impl VerdictReport {
    /// 0 unless a test failed or could not run; warnings count only when
    /// `strict_warnings` is set.
    pub fn exit_code(&self, strict_warnings: bool) -> i32 {
        let c = self.counts;
        if c.fail > 0 || c.errors > 0 || (strict_warnings && c.warning > 0) {
            1
        } else {
            0
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("verdict reports always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, DiffError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, DiffError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn find(&self, sequence: &[crate::automaton::EventSymbol]) -> Option<&SuiteVerdict> {
        self.verdicts.iter().find(|v| v.sequence == sequence)
    }
}

/// Runs every covered test of `suite` differentially. Errors of one test
/// are recorded and do not stop the others.
pub fn run_suite<D, F>(
    suite: &CoverageReport,
    app: F,
    enf: Arc<EnforcerModel>,
    predicates: &[TracePredicate],
) -> VerdictReport
where
    D: Interceptable,
    F: Fn() -> D,
{
    let mut report = VerdictReport::default();
    for (sequence, tc) in suite.covered() {
        let entry = match execute_differential(tc, &app, Arc::clone(&enf)) {
            Ok(v) => {
                match v.outcome {
                    Outcome::Pass => report.counts.pass += 1,
                    Outcome::Fail => report.counts.fail += 1,
                    Outcome::Warning => report.counts.warning += 1,
                }
                let plain: Vec<String> = events_of(&v.plain).into_iter().map(Into::into).collect();
                let enforced: Vec<String> =
                    events_of(&v.enforced).into_iter().map(Into::into).collect();
                let policies = predicates
                    .iter()
                    .map(|p| PolicyResult {
                        predicate: p.name().to_string(),
                        plain: p.evaluate(&plain),
                        enforced: p.evaluate(&enforced),
                    })
                    .collect();
                SuiteVerdict {
                    sequence: sequence.events.clone(),
                    verdict: Some(v),
                    error: None,
                    policies,
                }
            }
            Err(e) => {
                report.counts.errors += 1;
                SuiteVerdict {
                    sequence: sequence.events.clone(),
                    verdict: None,
                    error: Some(format!("{}: {e}", format_sequence(&sequence.events))),
                    policies: Vec::new(),
                }
            }
        };
        report.verdicts.push(entry);
    }
    report
}
