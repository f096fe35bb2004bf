//! Partial input/output automata describing runtime enforcers.
//!
//! An enforcer model consumes intercepted requests (`*_req` symbols) and
//! answers each of them with zero or more API events (`*_api` symbols). When
//! the emitted label matches the consumed label the enforcer only forwards
//! the request; any other answer suppresses or inserts calls.
//!
//! Models are partial: a state does not need a transition for every input,
//! because the environment never produces some combinations of events.
//! Models are deterministic on inputs, which is checked at load time.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

const REQUEST_SUFFIX: &str = "_req";
const API_SUFFIX: &str = "_api";

/// Whether a symbol is an intercepted request or an emitted API event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    Request,
    Api,
}

/// An event label plus its direction.
///
/// `camera.open_req` and `camera.open_api` are distinct symbols sharing the
/// label `camera.open`; forwarding is decided by comparing labels only.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventSymbol {
    name: String,
    kind: EventKind,
}

impl EventSymbol {
    pub fn new(name: impl Into<String>, kind: EventKind) -> Result<Self, ModelError> {
        let name = name.into().trim().to_string();
        if name.is_empty() {
            return Err(ModelError::Schema("empty event name".into()));
        }
        Ok(Self { name, kind })
    }

    /// Shorthand for a request symbol. Panics on an empty name.
    pub fn request(name: &str) -> Self {
        Self::new(name, EventKind::Request).expect("request symbol needs a name")
    }

    /// Shorthand for an API symbol. Panics on an empty name.
    pub fn api(name: &str) -> Self {
        Self::new(name, EventKind::Api).expect("api symbol needs a name")
    }

    /// Label without the direction suffix, e.g. `camera.open`.
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> EventKind {
        self.kind
    }

    /// True when both symbols carry the same label, whatever their kinds.
    pub fn same_label(&self, other: &EventSymbol) -> bool {
        self.name == other.name
    }
}

impl fmt::Display for EventSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let suffix = match self.kind {
            EventKind::Request => REQUEST_SUFFIX,
            EventKind::Api => API_SUFFIX,
        };
        write!(f, "{}{}", self.name, suffix)
    }
}

impl FromStr for EventSymbol {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some(name) = s.strip_suffix(REQUEST_SUFFIX) {
            Self::new(name, EventKind::Request)
        } else if let Some(name) = s.strip_suffix(API_SUFFIX) {
            Self::new(name, EventKind::Api)
        } else {
            Err(ModelError::Schema(format!(
                "symbol `{s}` carries neither a `{REQUEST_SUFFIX}` nor an `{API_SUFFIX}` suffix"
            )))
        }
    }
}

impl Serialize for EventSymbol {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EventSymbol {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

/// Formats a symbol sequence as space-separated symbols, `ε` when empty.
pub fn format_sequence(events: &[EventSymbol]) -> String {
    if events.is_empty() {
        return "ε".to_string();
    }
    events
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("invalid model JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot read model file: {0}")]
    Io(#[from] std::io::Error),
    #[error("transition {from} -> {to} references unknown symbol `{symbol}`")]
    UnknownSymbol {
        from: String,
        to: String,
        symbol: String,
    },
    #[error("transition references unknown state `{0}`")]
    UnknownState(String),
    #[error("initial state `{0}` is not declared in `states`")]
    UnknownInitial(String),
    #[error("nondeterministic input: state `{state}` has several transitions on `{trigger}`")]
    Nondeterministic { state: String, trigger: String },
    #[error("symbol `{0}` is declared more than once")]
    DuplicateSymbol(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StepError {
    #[error("input `{input}` not enabled in state `{state}`")]
    NotEnabled { state: String, input: EventSymbol },
    #[error("`{0}` is not an input or internal symbol of the model")]
    NotInAlphabet(EventSymbol),
}

/// A failed replay of an input sequence; `position` is 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("input {position}: {source}")]
pub struct RunError {
    pub position: usize,
    #[source]
    pub source: StepError,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Transition {
    pub from: String,
    pub trigger: EventSymbol,
    pub emissions: Vec<EventSymbol>,
    pub to: String,
}

impl Transition {
    /// True when the transition emits exactly its trigger's label.
    pub fn forwards(&self) -> bool {
        self.emissions.len() == 1 && self.emissions[0].same_label(&self.trigger)
    }
}

/// JSON form of a model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub states: Vec<String>,
    pub initial: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    #[serde(default)]
    pub internals: Vec<String>,
    pub transitions: Vec<TransitionDocument>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionDocument {
    pub from: String,
    pub trigger: String,
    #[serde(default)]
    pub emissions: Vec<String>,
    pub to: String,
}

/// A validated, immutable enforcer model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnforcerModel {
    states: BTreeSet<String>,
    initial: String,
    inputs: BTreeSet<EventSymbol>,
    internals: BTreeSet<EventSymbol>,
    outputs: BTreeSet<EventSymbol>,
    // Sorted by (from, trigger); indices are stable transition ids.
    transitions: Vec<Transition>,
    delta: BTreeMap<String, BTreeMap<EventSymbol, usize>>,
}

impl EnforcerModel {
    /// Validates a parsed document.
    pub fn from_document(doc: &ModelDocument) -> Result<Self, ModelError> {
        let mut states = BTreeSet::new();
        for s in &doc.states {
            let s = s.trim();
            if s.is_empty() {
                return Err(ModelError::Schema("empty state id".into()));
            }
            states.insert(s.to_string());
        }
        let initial = doc.initial.trim().to_string();
        if !states.contains(&initial) {
            return Err(ModelError::UnknownInitial(initial));
        }

        let mut seen = BTreeSet::new();
        let mut parse_set = |raw: &[String], kind: Option<EventKind>, field: &str| {
            let mut out = BTreeSet::new();
            for r in raw {
                let sym: EventSymbol = r.parse()?;
                if let Some(kind) = kind {
                    if sym.kind != kind {
                        return Err(ModelError::Schema(format!(
                            "`{sym}` listed in `{field}` has the wrong suffix"
                        )));
                    }
                }
                if !seen.insert(sym.clone()) {
                    return Err(ModelError::DuplicateSymbol(sym.to_string()));
                }
                out.insert(sym);
            }
            Ok(out)
        };
        let inputs = parse_set(&doc.inputs, Some(EventKind::Request), "inputs")?;
        let outputs = parse_set(&doc.outputs, Some(EventKind::Api), "outputs")?;
        let internals = parse_set(&doc.internals, None, "internals")?;

        let mut transitions = Vec::with_capacity(doc.transitions.len());
        for t in &doc.transitions {
            let from = t.from.trim().to_string();
            let to = t.to.trim().to_string();
            for s in [&from, &to] {
                if !states.contains(s) {
                    return Err(ModelError::UnknownState(s.clone()));
                }
            }
            let unknown = |symbol: &str| ModelError::UnknownSymbol {
                from: from.clone(),
                to: to.clone(),
                symbol: symbol.to_string(),
            };
            let trigger: EventSymbol = t.trigger.parse().map_err(|_| unknown(&t.trigger))?;
            if !inputs.contains(&trigger) && !internals.contains(&trigger) {
                return Err(unknown(&t.trigger));
            }
            let mut emissions = Vec::with_capacity(t.emissions.len());
            for e in &t.emissions {
                let sym: EventSymbol = e.parse().map_err(|_| unknown(e))?;
                if !outputs.contains(&sym) {
                    return Err(unknown(e));
                }
                emissions.push(sym);
            }
            transitions.push(Transition {
                from,
                trigger,
                emissions,
                to,
            });
        }
        Self::from_parts(states, initial, inputs, internals, outputs, transitions)
    }

    fn from_parts(
        states: BTreeSet<String>,
        initial: String,
        inputs: BTreeSet<EventSymbol>,
        internals: BTreeSet<EventSymbol>,
        outputs: BTreeSet<EventSymbol>,
        mut transitions: Vec<Transition>,
    ) -> Result<Self, ModelError> {
        transitions.sort_by(|a, b| (&a.from, &a.trigger).cmp(&(&b.from, &b.trigger)));
        let mut delta: BTreeMap<String, BTreeMap<EventSymbol, usize>> = BTreeMap::new();
        for (id, t) in transitions.iter().enumerate() {
            let row = delta.entry(t.from.clone()).or_default();
            if row.insert(t.trigger.clone(), id).is_some() {
                return Err(ModelError::Nondeterministic {
                    state: t.from.clone(),
                    trigger: t.trigger.to_string(),
                });
            }
        }
        Ok(Self {
            states,
            initial,
            inputs,
            internals,
            outputs,
            transitions,
            delta,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        Self::from_document(&doc)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_document(&self) -> ModelDocument {
        let names = |set: &BTreeSet<EventSymbol>| set.iter().map(ToString::to_string).collect();
        ModelDocument {
            states: self.states.iter().cloned().collect(),
            initial: self.initial.clone(),
            inputs: names(&self.inputs),
            outputs: names(&self.outputs),
            internals: names(&self.internals),
            transitions: self
                .transitions
                .iter()
                .map(|t| TransitionDocument {
                    from: t.from.clone(),
                    trigger: t.trigger.to_string(),
                    emissions: t.emissions.iter().map(ToString::to_string).collect(),
                    to: t.to.clone(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("model documents always serialize")
    }

    pub fn states(&self) -> &BTreeSet<String> {
        &self.states
    }

    pub fn initial(&self) -> &str {
        &self.initial
    }

    pub fn inputs(&self) -> &BTreeSet<EventSymbol> {
        &self.inputs
    }

    pub fn internals(&self) -> &BTreeSet<EventSymbol> {
        &self.internals
    }

    pub fn outputs(&self) -> &BTreeSet<EventSymbol> {
        &self.outputs
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    /// Labels of every symbol the enforcer consumes or emits.
    pub fn alphabet_names(&self) -> BTreeSet<String> {
        self.inputs
            .iter()
            .chain(&self.internals)
            .chain(&self.outputs)
            .map(|s| s.name.clone())
            .collect()
    }

    /// Labels of the symbols the enforcer consumes.
    pub fn input_names(&self) -> BTreeSet<String> {
        self.inputs
            .iter()
            .chain(&self.internals)
            .map(|s| s.name.clone())
            .collect()
    }

    /// Whether `input` may be fed to the model at all.
    pub fn accepts_symbol(&self, input: &EventSymbol) -> bool {
        self.inputs.contains(input) || self.internals.contains(input)
    }

    /// Id of the transition leaving `state` on `input`, if any.
    pub fn transition_id(&self, state: &str, input: &EventSymbol) -> Option<usize> {
        self.delta.get(state)?.get(input).copied()
    }

    pub fn successor(&self, state: &str, input: &EventSymbol) -> Option<&Transition> {
        self.transition_id(state, input)
            .map(|id| &self.transitions[id])
    }

    /// Transition ids leaving `state`, ordered by trigger.
    pub fn outgoing(&self, state: &str) -> impl Iterator<Item = usize> + '_ {
        self.delta
            .get(state)
            .into_iter()
            .flat_map(|row| row.values().copied())
    }

    pub fn enabled_inputs(&self, state: &str) -> Result<BTreeSet<EventSymbol>, ModelError> {
        if !self.states.contains(state) {
            return Err(ModelError::UnknownState(state.to_string()));
        }
        Ok(self
            .delta
            .get(state)
            .map(|row| row.keys().cloned().collect())
            .unwrap_or_default())
    }

    /// Output sequence and final state when feeding `inputs` from `state`.
    pub fn run_from(
        &self,
        state: &str,
        inputs: &[EventSymbol],
    ) -> Result<(Vec<EventSymbol>, String), RunError> {
        let mut current = state;
        let mut out = Vec::new();
        for (i, input) in inputs.iter().enumerate() {
            let t = self.fire(current, input).map_err(|source| RunError {
                position: i + 1,
                source,
            })?;
            out.extend(t.emissions.iter().cloned());
            current = &t.to;
        }
        Ok((out, current.to_string()))
    }

    /// Output sequence produced from the initial state.
    pub fn run(&self, inputs: &[EventSymbol]) -> Result<Vec<EventSymbol>, RunError> {
        self.run_from(&self.initial, inputs).map(|(out, _)| out)
    }

    /// True when `inputs` is an input sequence for `state`.
    pub fn is_enabled_from(&self, state: &str, inputs: &[EventSymbol]) -> bool {
        self.run_from(state, inputs).is_ok()
    }

    fn fire(&self, state: &str, input: &EventSymbol) -> Result<&Transition, StepError> {
        if !self.accepts_symbol(input) {
            return Err(StepError::NotInAlphabet(input.clone()));
        }
        self.successor(state, input)
            .ok_or_else(|| StepError::NotEnabled {
                state: state.to_string(),
                input: input.clone(),
            })
    }
}

/// The two-state camera enforcer that releases a held camera when the
/// activity is paused.
pub fn camera_release_enforcer() -> EnforcerModel {
    EnforcerModel::from_json(include_str!("../models/camera_release.json"))
        .expect("bundled camera enforcer is valid")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceEntry {
    pub input: EventSymbol,
    pub outputs: Vec<EventSymbol>,
}

/// Runtime cursor executing a model as an enforcer.
#[derive(Debug, Clone)]
pub struct EnforcerState {
    model: Arc<EnforcerModel>,
    current: String,
    trace: Vec<TraceEntry>,
}

impl EnforcerState {
    pub fn new(model: Arc<EnforcerModel>) -> Self {
        let current = model.initial.clone();
        Self {
            model,
            current,
            trace: Vec::new(),
        }
    }

    pub fn model(&self) -> &EnforcerModel {
        &self.model
    }

    pub fn current(&self) -> &str {
        &self.current
    }

    pub fn trace(&self) -> &[TraceEntry] {
        &self.trace
    }

    pub fn reset(&mut self) {
        self.current = self.model.initial.clone();
        self.trace.clear();
    }

    /// Consumes one input and returns what the enforcer emits for it.
    pub fn step(&mut self, input: &EventSymbol) -> Result<Vec<EventSymbol>, StepError> {
        let t = self.model.fire(&self.current, input)?;
        let outputs = t.emissions.clone();
        self.current = t.to.clone();
        self.trace.push(TraceEntry {
            input: input.clone(),
            outputs: outputs.clone(),
        });
        Ok(outputs)
    }
}
