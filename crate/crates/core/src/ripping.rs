//! Breadth-first GUI ripping with event monitoring.
//!
//! Every action available in every discovered state is executed once.
//! Frontier states are re-reached by resetting the driver and replaying the
//! shortest recorded action path to them. Each executed action, replays
//! included, counts against the budget.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sut::{GuiState, StateDigest, SutDriver, UiAction};

#[derive(Debug, Error)]
pub enum RipError {
    #[error("the action budget must be at least 1")]
    ZeroBudget,
    #[error("invalid ripping model JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot access ripping model file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed ripping model: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RippedState {
    pub digest: StateDigest,
    pub views: GuiState,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RipTransition {
    pub from: StateDigest,
    pub action: UiAction,
    pub events: Vec<String>,
    pub to: StateDigest,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RipMeta {
    pub budget: usize,
    /// All actions performed, exploration and navigation replays.
    pub actions_executed: usize,
    pub replay_actions: usize,
    pub resets: usize,
    /// True when the frontier was exhausted before the budget.
    pub complete: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

/// GUI states (in discovery order), the initial state, and transitions
/// labelled with the monitored events.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RippingModel {
    pub states: Vec<RippedState>,
    pub initial: StateDigest,
    pub transitions: Vec<RipTransition>,
    pub meta: RipMeta,
}

impl RippingModel {
    pub fn state(&self, digest: &StateDigest) -> Option<&RippedState> {
        self.states.iter().find(|s| &s.digest == digest)
    }

    pub fn outgoing<'a>(
        &'a self,
        digest: &'a StateDigest,
    ) -> impl Iterator<Item = &'a RipTransition> + 'a {
        self.transitions.iter().filter(move |t| &t.from == digest)
    }

    /// Checks that the initial state and all transition endpoints exist.
    pub fn validate(&self) -> Result<(), RipError> {
        let known: HashSet<&StateDigest> = self.states.iter().map(|s| &s.digest).collect();
        if !known.contains(&self.initial) {
            return Err(RipError::Malformed(format!(
                "initial state {} not listed",
                self.initial
            )));
        }
        for t in &self.transitions {
            for d in [&t.from, &t.to] {
                if !known.contains(d) {
                    return Err(RipError::Malformed(format!("unknown state {d}")));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, RipError> {
        let model: Self = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RipError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ripping models always serialize")
    }

    /// Shortest action path from the initial state to every reachable state.
    pub fn access_paths(&self) -> HashMap<StateDigest, Vec<UiAction>> {
        let mut paths = HashMap::from([(self.initial.clone(), Vec::new())]);
        let mut queue = VecDeque::from([self.initial.clone()]);
        while let Some(d) = queue.pop_front() {
            let mut out: Vec<&RipTransition> = self.outgoing(&d).collect();
            out.sort_by(|a, b| a.action.cmp(&b.action));
            for t in out {
                if !paths.contains_key(&t.to) {
                    let mut p = paths[&d].clone();
                    p.push(t.action.clone());
                    paths.insert(t.to.clone(), p);
                    queue.push_back(t.to.clone());
                }
            }
        }
        paths
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RipConfig {
    pub budget: usize,
    /// Shuffles the action order of each state with this seed.
    pub seed: Option<u64>,
    /// When set, only these event labels are recorded on transitions.
    pub alphabet: Option<BTreeSet<String>>,
}

impl RipConfig {
    pub fn with_budget(budget: usize) -> Self {
        Self {
            budget,
            seed: None,
            alphabet: None,
        }
    }
}

struct Frontier {
    path: Vec<UiAction>,
    // Digest expected after each step of `path`.
    trail: Vec<StateDigest>,
}

pub fn rip<D: SutDriver + ?Sized>(sut: &mut D, cfg: &RipConfig) -> Result<RippingModel, RipError> {
    if cfg.budget == 0 {
        return Err(RipError::ZeroBudget);
    }
    let mut rng = cfg.seed.map(ChaCha8Rng::seed_from_u64);
    let mut meta = RipMeta {
        budget: cfg.budget,
        seed: cfg.seed,
        ..RipMeta::default()
    };

    let s0 = sut.reset();
    meta.resets += 1;
    let initial = sut.digest(&s0);
    let mut states = vec![RippedState {
        digest: initial.clone(),
        views: s0,
    }];
    let mut frontier: HashMap<StateDigest, Frontier> = HashMap::from([(
        initial.clone(),
        Frontier {
            path: Vec::new(),
            trail: Vec::new(),
        },
    )]);
    let mut queue = VecDeque::from([initial.clone()]);
    let mut transitions = Vec::new();
    let mut current: Option<StateDigest> = Some(initial.clone());
    let mut exhausted = false;

    'explore: while let Some(d) = queue.pop_front() {
        let views = states
            .iter()
            .find(|s| s.digest == d)
            .map(|s| s.views.clone())
            .expect("queued states are recorded");
        let mut actions = sut.available_actions(&views);
        actions.sort();
        if let Some(rng) = rng.as_mut() {
            actions.shuffle(rng);
        }

        for action in actions {
            if current.as_ref() != Some(&d) {
                let nav = &frontier[&d];
                if meta.actions_executed + nav.path.len() + 1 > cfg.budget {
                    exhausted = true;
                    break 'explore;
                }
                sut.reset();
                meta.resets += 1;
                current = Some(initial.clone());
                let mut diverged = false;
                for (step, expected) in nav.path.iter().zip(&nav.trail) {
                    meta.actions_executed += 1;
                    meta.replay_actions += 1;
                    match sut.perform(step) {
                        Ok(p) => {
                            let got = sut.digest(&p.state);
                            current = Some(got.clone());
                            if &got != expected {
                                meta.diagnostics.push(format!(
                                    "replay to {d} diverged after {step}: expected {expected}, reached {got}"
                                ));
                                diverged = true;
                                break;
                            }
                        }
                        Err(e) => {
                            meta.diagnostics
                                .push(format!("replay to {d} failed at {step}: {e}"));
                            current = None;
                            diverged = true;
                            break;
                        }
                    }
                }
                if diverged {
                    continue;
                }
            } else if meta.actions_executed + 1 > cfg.budget {
                exhausted = true;
                break 'explore;
            }

            meta.actions_executed += 1;
            let performed = match sut.perform(&action) {
                Ok(p) => p,
                Err(e) => {
                    meta.diagnostics
                        .push(format!("{action} on {d} failed: {e}"));
                    current = None;
                    continue;
                }
            };
            let to = sut.digest(&performed.state);
            if !frontier.contains_key(&to) {
                let nav = &frontier[&d];
                let mut path = nav.path.clone();
                path.push(action.clone());
                let mut trail = nav.trail.clone();
                trail.push(to.clone());
                frontier.insert(to.clone(), Frontier { path, trail });
                states.push(RippedState {
                    digest: to.clone(),
                    views: performed.state,
                });
                queue.push_back(to.clone());
            }
            let events = match &cfg.alphabet {
                Some(alphabet) => performed
                    .events
                    .into_iter()
                    .filter(|e| alphabet.contains(e))
                    .collect(),
                None => performed.events,
            };
            transitions.push(RipTransition {
                from: d.clone(),
                action,
                events,
                to: to.clone(),
            });
            current = Some(to);
        }
    }
    meta.complete = !exhausted && queue.is_empty();

    Ok(RippingModel {
        states,
        initial,
        transitions,
        meta,
    })
}

/// Collapses states with equal digests and identical transitions.
pub fn merge_states(model: &RippingModel) -> RippingModel {
    let mut seen_states = HashSet::new();
    let states = model
        .states
        .iter()
        .filter(|s| seen_states.insert(s.digest.clone()))
        .cloned()
        .collect();
    let mut seen_transitions = HashSet::new();
    let transitions = model
        .transitions
        .iter()
        .filter(|t| seen_transitions.insert((*t).clone()))
        .cloned()
        .collect();
    RippingModel {
        states,
        initial: model.initial.clone(),
        transitions,
        meta: model.meta.clone(),
    }
}
