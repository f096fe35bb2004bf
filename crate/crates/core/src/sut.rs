//! Systems under test: GUI states, UI actions, drivers with an event tap,
//! and enforcer attachment.
//!
//! A driver separates what the application *requests* (the calls its
//! handlers make, observed by the monitor) from what the platform
//! *dispatches* (the calls that actually take effect). Without an enforcer
//! every request is dispatched as is. With an enforcer attached, requests
//! are fed to the enforcer and only its emissions are dispatched, so
//! suppressed calls have no effect and inserted calls do.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::automaton::{EnforcerModel, EnforcerState, EventSymbol, StepError};

/// Text entered by `set_text` actions.
pub const DEFAULT_TEXT: &str = "enftest";
/// Direction used by `scroll` actions.
pub const DEFAULT_SCROLL: &str = "down";
/// Navigation key available on every screen.
pub const BACK_KEY: &str = "back";

#[derive(Debug, Error)]
pub enum SutError {
    #[error("action {action} unavailable: {reason}")]
    ActionUnavailable { action: UiAction, reason: String },
    #[error("duplicate view id `{0}` in one GUI state")]
    DuplicateView(String),
    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),
    #[error("malformed screen graph: {0}")]
    Malformed(String),
    #[error("invalid screen graph JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot read screen graph: {0}")]
    Io(#[from] std::io::Error),
    #[error("enforcer alphabet not produced by the application: {}", .missing.join(", "))]
    AlphabetMismatch { missing: Vec<String> },
    #[error("enforcer rejected an application event: {0}")]
    Enforcer(#[from] StepError),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct View {
    pub id: String,
    #[serde(default)]
    pub properties: BTreeMap<String, String>,
}

impl View {
    pub fn new<'a>(id: &str, props: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        Self {
            id: id.to_string(),
            properties: props
                .into_iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        }
    }

    fn flag(&self, property: &str) -> bool {
        self.properties.get(property).map(String::as_str) == Some("true")
    }
}

/// Structural identity of a GUI state.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateDigest(String);

impl StateDigest {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StateDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// The set of visible views; views are kept sorted by id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GuiState {
    views: Vec<View>,
}

impl GuiState {
    pub fn new(mut views: Vec<View>) -> Result<Self, SutError> {
        views.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = views.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(SutError::DuplicateView(w[0].id.clone()));
        }
        Ok(Self { views })
    }

    pub fn views(&self) -> &[View] {
        &self.views
    }

    pub fn view(&self, id: &str) -> Option<&View> {
        self.views
            .binary_search_by(|v| v.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.views[i])
    }

    /// Digest over view ids and their properties, skipping `volatile` ones.
    pub fn digest(&self, volatile: &BTreeSet<String>) -> StateDigest {
        let mut h = Sha256::new();
        let mut put = |s: &str| {
            h.update((s.len() as u64).to_le_bytes());
            h.update(s.as_bytes());
        };
        for v in &self.views {
            put(&v.id);
            for (k, val) in &v.properties {
                if !volatile.contains(k) {
                    put(k);
                    put(val);
                }
            }
            put("");
        }
        let full = format!("{:x}", h.finalize());
        StateDigest(full[..16].to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Touch,
    LongTouch,
    SetText,
    KeyEvent,
    Scroll,
}

/// A UI interaction. Ordering is by (kind, target, payload).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UiAction {
    pub kind: ActionKind,
    pub target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<String>,
}

impl UiAction {
    pub fn touch(target: &str) -> Self {
        Self {
            kind: ActionKind::Touch,
            target: target.into(),
            payload: None,
        }
    }

    pub fn long_touch(target: &str) -> Self {
        Self {
            kind: ActionKind::LongTouch,
            target: target.into(),
            payload: None,
        }
    }

    pub fn set_text(target: &str) -> Self {
        Self {
            kind: ActionKind::SetText,
            target: target.into(),
            payload: Some(DEFAULT_TEXT.into()),
        }
    }

    pub fn scroll(target: &str) -> Self {
        Self {
            kind: ActionKind::Scroll,
            target: target.into(),
            payload: Some(DEFAULT_SCROLL.into()),
        }
    }

    pub fn back() -> Self {
        Self {
            kind: ActionKind::KeyEvent,
            target: BACK_KEY.into(),
            payload: None,
        }
    }
}

impl fmt::Display for UiAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            ActionKind::Touch => "touch",
            ActionKind::LongTouch => "long_touch",
            ActionKind::SetText => "set_text",
            ActionKind::KeyEvent => "key_event",
            ActionKind::Scroll => "scroll",
        };
        match &self.payload {
            Some(p) => write!(f, "{kind}({}, {p})", self.target),
            None => write!(f, "{kind}({})", self.target),
        }
    }
}

/// Actions a ripper may try on `state`: taps and long taps on clickable
/// views, text entry on editable views, scrolls on scrollable views, and
/// the back key. Sorted.
pub fn actions_for(state: &GuiState) -> Vec<UiAction> {
    let mut out = vec![UiAction::back()];
    for v in state.views() {
        if v.flag("clickable") {
            out.push(UiAction::touch(&v.id));
            out.push(UiAction::long_touch(&v.id));
        }
        if v.flag("editable") {
            out.push(UiAction::set_text(&v.id));
        }
        if v.flag("scrollable") {
            out.push(UiAction::scroll(&v.id));
        }
    }
    out.sort();
    out
}

/// Checks that `action` can be executed on `state`.
pub fn check_action(state: &GuiState, action: &UiAction) -> Result<(), SutError> {
    let unavailable = |reason: String| SutError::ActionUnavailable {
        action: action.clone(),
        reason,
    };
    let required = match action.kind {
        ActionKind::KeyEvent => {
            return if action.target == BACK_KEY {
                Ok(())
            } else {
                Err(unavailable(format!("unknown key `{}`", action.target)))
            };
        }
        ActionKind::Touch | ActionKind::LongTouch => "clickable",
        ActionKind::SetText => "editable",
        ActionKind::Scroll => "scrollable",
    };
    match state.view(&action.target) {
        None => Err(unavailable(format!(
            "no view `{}` on screen",
            action.target
        ))),
        Some(v) if !v.flag(required) => Err(unavailable(format!(
            "view `{}` is not {required}",
            action.target
        ))),
        Some(_) => Ok(()),
    }
}

/// Result of one action: the resulting GUI state and the events the
/// monitor observed, in execution order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Performed {
    pub state: GuiState,
    pub events: Vec<String>,
}

/// Interface a ripper, a test generator and the differential runner use to
/// drive a system under test.
pub trait SutDriver {
    /// Restores the initial state.
    fn reset(&mut self) -> GuiState;

    fn observe(&self) -> GuiState;

    fn available_actions(&self, state: &GuiState) -> Vec<UiAction> {
        actions_for(state)
    }

    /// Executes `action`; the returned events are the only source of
    /// monitored events.
    fn perform(&mut self, action: &UiAction) -> Result<Performed, SutError>;

    /// Every event label the system can emit.
    fn event_names(&self) -> BTreeSet<String>;

    /// Properties left out of state digests.
    fn volatile_properties(&self) -> BTreeSet<String> {
        BTreeSet::new()
    }

    fn digest(&self, state: &GuiState) -> StateDigest {
        state.digest(&self.volatile_properties())
    }
}

/// A driver whose requested calls can be intercepted before dispatch.
pub trait Interceptable: SutDriver {
    /// Runs the application side of `action` and returns the calls it
    /// requests, without dispatching them.
    fn request(&mut self, action: &UiAction) -> Result<Vec<String>, SutError>;

    /// Lets one call take effect.
    fn dispatch(&mut self, event: &str);
}

impl<D: SutDriver + ?Sized> SutDriver for Box<D> {
    fn reset(&mut self) -> GuiState {
        (**self).reset()
    }
    fn observe(&self) -> GuiState {
        (**self).observe()
    }
    fn available_actions(&self, state: &GuiState) -> Vec<UiAction> {
        (**self).available_actions(state)
    }
    fn perform(&mut self, action: &UiAction) -> Result<Performed, SutError> {
        (**self).perform(action)
    }
    fn event_names(&self) -> BTreeSet<String> {
        (**self).event_names()
    }
    fn volatile_properties(&self) -> BTreeSet<String> {
        (**self).volatile_properties()
    }
}

// ---------------------------------------------------------------------------
// Screen graphs
// ---------------------------------------------------------------------------

/// A view declaration; `visible_when` names a flag (`!flag` negates) that
/// must hold for the view to be shown.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewDocument {
    pub id: String,
    #[serde(default)]
    pub properties: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub visible_when: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScreenDocument {
    pub id: String,
    pub views: Vec<ViewDocument>,
}

/// Application logic: `action` on screen `from` requests `events` and moves
/// to `to`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDocument {
    pub from: String,
    pub action: UiAction,
    #[serde(default)]
    pub events: Vec<String>,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffectEdge {
    pub from: String,
    pub to: String,
}

/// Platform effect of a dispatched call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HandlerDocument {
    pub event: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub set: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub clear: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge: Option<EffectEdge>,
}

/// JSON form of a scripted fixture.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScreenGraphDocument {
    pub screens: Vec<ScreenDocument>,
    pub initial: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
    pub edges: Vec<EdgeDocument>,
    #[serde(default)]
    pub handlers: Vec<HandlerDocument>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub volatile: Vec<String>,
}

#[derive(Debug, Clone)]
struct Edge {
    events: Vec<String>,
    to: String,
}

/// Validated screen graph.
#[derive(Debug, Clone)]
pub struct ScreenGraph {
    screens: BTreeMap<String, Vec<ViewDocument>>,
    initial: String,
    edges: BTreeMap<(String, UiAction), Edge>,
    handlers: BTreeMap<String, Vec<HandlerDocument>>,
    volatile: BTreeSet<String>,
    event_names: BTreeSet<String>,
}

impl ScreenGraph {
    pub fn from_document(doc: &ScreenGraphDocument) -> Result<Self, SutError> {
        let bad = |m: String| SutError::Malformed(m);
        let flags: BTreeSet<&str> = doc.flags.iter().map(String::as_str).collect();
        let check_flag = |f: &str| {
            if flags.contains(f) {
                Ok(())
            } else {
                Err(bad(format!("undeclared flag `{f}`")))
            }
        };

        let mut screens = BTreeMap::new();
        for s in &doc.screens {
            let mut ids = BTreeSet::new();
            for v in &s.views {
                if !ids.insert(v.id.as_str()) {
                    return Err(bad(format!("screen `{}` repeats view `{}`", s.id, v.id)));
                }
                if let Some(cond) = &v.visible_when {
                    check_flag(cond.strip_prefix('!').unwrap_or(cond))?;
                }
            }
            if screens.insert(s.id.clone(), s.views.clone()).is_some() {
                return Err(bad(format!("screen `{}` declared twice", s.id)));
            }
        }
        let known = |id: &str| {
            if screens.contains_key(id) {
                Ok(())
            } else {
                Err(bad(format!("unknown screen `{id}`")))
            }
        };
        known(&doc.initial)?;

        let mut event_names = BTreeSet::new();
        let mut edges = BTreeMap::new();
        for e in &doc.edges {
            known(&e.from)?;
            known(&e.to)?;
            // Validate against the screen with every view shown.
            let all_views = screens[&e.from]
                .iter()
                .map(|v| View {
                    id: v.id.clone(),
                    properties: v.properties.clone(),
                })
                .collect();
            check_action(&GuiState::new(all_views)?, &e.action)
                .map_err(|err| bad(format!("edge from `{}`: {err}", e.from)))?;
            event_names.extend(e.events.iter().cloned());
            let edge = Edge {
                events: e.events.clone(),
                to: e.to.clone(),
            };
            if edges
                .insert((e.from.clone(), e.action.clone()), edge)
                .is_some()
            {
                return Err(bad(format!(
                    "screen `{}` has two edges for {}",
                    e.from, e.action
                )));
            }
        }

        let mut handlers: BTreeMap<String, Vec<HandlerDocument>> = BTreeMap::new();
        for h in &doc.handlers {
            for f in h.set.iter().chain(&h.clear) {
                check_flag(f)?;
            }
            if let Some(edge) = &h.edge {
                known(&edge.from)?;
                known(&edge.to)?;
            }
            event_names.insert(h.event.clone());
            handlers.entry(h.event.clone()).or_default().push(h.clone());
        }

        Ok(Self {
            screens,
            initial: doc.initial.clone(),
            edges,
            handlers,
            volatile: doc.volatile.iter().cloned().collect(),
            event_names,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, SutError> {
        Self::from_document(&serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SutError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn screen_ids(&self) -> impl Iterator<Item = &str> {
        self.screens.keys().map(String::as_str)
    }
}

/// Deterministic driver over a [`ScreenGraph`].
#[derive(Debug, Clone)]
pub struct ScreenGraphApp {
    graph: Arc<ScreenGraph>,
    screen: String,
    flags: BTreeSet<String>,
}

impl ScreenGraphApp {
    pub fn new(graph: Arc<ScreenGraph>) -> Self {
        let screen = graph.initial.clone();
        Self {
            graph,
            screen,
            flags: BTreeSet::new(),
        }
    }

    pub fn screen(&self) -> &str {
        &self.screen
    }

    pub fn flag(&self, name: &str) -> bool {
        self.flags.contains(name)
    }

    fn visible(&self, cond: &Option<String>) -> bool {
        match cond.as_deref() {
            None => true,
            Some(c) => match c.strip_prefix('!') {
                Some(f) => !self.flags.contains(f),
                None => self.flags.contains(c),
            },
        }
    }
}

impl PartialEq for ScreenGraphApp {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.graph, &other.graph)
            && self.screen == other.screen
            && self.flags == other.flags
    }
}

impl Eq for ScreenGraphApp {}

impl Hash for ScreenGraphApp {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.screen.hash(state);
        self.flags.hash(state);
    }
}

impl SutDriver for ScreenGraphApp {
    fn reset(&mut self) -> GuiState {
        self.screen = self.graph.initial.clone();
        self.flags.clear();
        self.observe()
    }

    fn observe(&self) -> GuiState {
        let views = self.graph.screens[&self.screen]
            .iter()
            .filter(|v| self.visible(&v.visible_when))
            .map(|v| View {
                id: v.id.clone(),
                properties: v.properties.clone(),
            })
            .collect();
        GuiState::new(views).expect("screen graphs have unique view ids")
    }

    fn perform(&mut self, action: &UiAction) -> Result<Performed, SutError> {
        let events = self.request(action)?;
        for e in &events {
            self.dispatch(e);
        }
        Ok(Performed {
            state: self.observe(),
            events,
        })
    }

    fn event_names(&self) -> BTreeSet<String> {
        self.graph.event_names.clone()
    }

    fn volatile_properties(&self) -> BTreeSet<String> {
        self.graph.volatile.clone()
    }
}

impl Interceptable for ScreenGraphApp {
    fn request(&mut self, action: &UiAction) -> Result<Vec<String>, SutError> {
        check_action(&self.observe(), action)?;
        // Actions without an edge are accepted and change nothing.
        match self.graph.edges.get(&(self.screen.clone(), action.clone())) {
            Some(edge) => {
                self.screen = edge.to.clone();
                Ok(edge.events.clone())
            }
            None => Ok(Vec::new()),
        }
    }

    fn dispatch(&mut self, event: &str) {
        let Some(handlers) = self.graph.handlers.get(event) else {
            return;
        };
        for h in handlers {
            for f in &h.set {
                self.flags.insert(f.clone());
            }
            for f in &h.clear {
                self.flags.remove(f);
            }
            if let Some(edge) = &h.edge {
                if edge.from == self.screen {
                    self.screen = edge.to.clone();
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Fixtures
// ---------------------------------------------------------------------------

pub const CAMERA_OPEN: &str = "camera.open";
pub const CAMERA_RELEASE: &str = "camera.release";
pub const ACTIVITY_PAUSE: &str = "activity.onPause";

/// Built-in fixture names with a one-line description.
pub const BUILTIN_FIXTURES: &[(&str, &str)] = &[
    (
        "foocam_c",
        "camera app that opens the camera on start and releases it when paused",
    ),
    (
        "foocam_f",
        "faulty variant of foocam_c that never releases the camera when paused",
    ),
];

/// Screen graph of the HDR camera app. The activity opens the camera when
/// started or resumed; a toggle releases and reopens it; leaving the
/// activity pauses it, and `release_on_pause` decides whether the pause
/// handler releases a held camera.
pub fn foocam_document(release_on_pause: bool) -> ScreenGraphDocument {
    fn view(id: &str, props: &[(&str, &str)], visible_when: Option<&str>) -> ViewDocument {
        ViewDocument {
            id: id.into(),
            properties: props
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
            visible_when: visible_when.map(Into::into),
        }
    }
    fn edge(from: &str, action: UiAction, events: &[&str], to: &str) -> EdgeDocument {
        EdgeDocument {
            from: from.into(),
            action,
            events: events.iter().map(|e| e.to_string()).collect(),
            to: to.into(),
        }
    }
    let main_views = |toggle_text: &str| {
        vec![
            view("title", &[("class", "TextView"), ("text", "fooCam")], None),
            view("preview", &[("class", "SurfaceView")], Some("camera_held")),
            view(
                "shutter",
                &[
                    ("class", "Button"),
                    ("clickable", "true"),
                    ("text", "Shoot"),
                ],
                None,
            ),
            view(
                "camera_toggle",
                &[
                    ("class", "Button"),
                    ("clickable", "true"),
                    ("text", toggle_text),
                ],
                None,
            ),
            view(
                "settings",
                &[
                    ("class", "ImageButton"),
                    ("clickable", "true"),
                    ("text", "Settings"),
                ],
                None,
            ),
        ]
    };
    let settings_views = |shots: &str| {
        vec![
            view(
                "title",
                &[("class", "TextView"), ("text", "Settings")],
                None,
            ),
            view(
                "shots",
                &[("class", "EditText"), ("editable", "true"), ("text", shots)],
                None,
            ),
            view(
                "exposure_list",
                &[("class", "ListView"), ("scrollable", "true")],
                None,
            ),
            view(
                "about",
                &[
                    ("class", "TextView"),
                    ("clickable", "true"),
                    ("text", "About"),
                ],
                None,
            ),
        ]
    };

    let pause: &[&str] = if release_on_pause {
        &[CAMERA_RELEASE, ACTIVITY_PAUSE]
    } else {
        &[ACTIVITY_PAUSE]
    };

    ScreenGraphDocument {
        screens: vec![
            ScreenDocument {
                id: "launcher".into(),
                views: vec![
                    view("home", &[("class", "FrameLayout")], None),
                    view(
                        "app_icon",
                        &[
                            ("class", "TextView"),
                            ("clickable", "true"),
                            ("text", "fooCam"),
                        ],
                        None,
                    ),
                ],
            },
            ScreenDocument {
                id: "main".into(),
                views: main_views("Pause camera"),
            },
            ScreenDocument {
                id: "main_paused".into(),
                views: main_views("Resume camera"),
            },
            ScreenDocument {
                id: "settings".into(),
                views: settings_views("3"),
            },
            ScreenDocument {
                id: "settings_edited".into(),
                views: settings_views(DEFAULT_TEXT),
            },
            ScreenDocument {
                id: "about".into(),
                views: vec![
                    view("title", &[("class", "TextView"), ("text", "About")], None),
                    view("version", &[("class", "TextView"), ("text", "1.0")], None),
                ],
            },
        ],
        initial: "launcher".into(),
        flags: vec!["camera_held".into()],
        edges: vec![
            edge(
                "launcher",
                UiAction::touch("app_icon"),
                &[CAMERA_OPEN],
                "main",
            ),
            edge(
                "main",
                UiAction::touch("camera_toggle"),
                &[CAMERA_RELEASE],
                "main_paused",
            ),
            edge(
                "main_paused",
                UiAction::touch("camera_toggle"),
                &[CAMERA_OPEN],
                "main",
            ),
            edge("main", UiAction::back(), pause, "launcher"),
            edge("main", UiAction::touch("settings"), pause, "settings"),
            // The camera is already released here, whatever the variant.
            edge(
                "main_paused",
                UiAction::back(),
                &[ACTIVITY_PAUSE],
                "launcher",
            ),
            edge(
                "main_paused",
                UiAction::touch("settings"),
                &[ACTIVITY_PAUSE],
                "settings",
            ),
            edge("settings", UiAction::back(), &[CAMERA_OPEN], "main"),
            edge("settings_edited", UiAction::back(), &[CAMERA_OPEN], "main"),
            edge(
                "settings",
                UiAction::set_text("shots"),
                &[],
                "settings_edited",
            ),
            edge("settings", UiAction::touch("about"), &[], "about"),
            edge("settings_edited", UiAction::touch("about"), &[], "about"),
            edge("about", UiAction::back(), &[], "settings"),
        ],
        handlers: vec![
            HandlerDocument {
                event: CAMERA_OPEN.into(),
                set: vec!["camera_held".into()],
                clear: vec![],
                edge: None,
            },
            HandlerDocument {
                event: CAMERA_RELEASE.into(),
                set: vec![],
                clear: vec!["camera_held".into()],
                edge: None,
            },
        ],
        volatile: vec![],
    }
}

/// A named, loaded fixture from which fresh drivers are made.
#[derive(Debug, Clone)]
pub struct Fixture {
    name: String,
    graph: Arc<ScreenGraph>,
}

impl Fixture {
    pub fn from_graph(name: impl Into<String>, graph: ScreenGraph) -> Self {
        Self {
            name: name.into(),
            graph: Arc::new(graph),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// A fresh driver in the initial state.
    pub fn driver(&self) -> ScreenGraphApp {
        ScreenGraphApp::new(Arc::clone(&self.graph))
    }
}

/// Looks up `foocam_c`, `foocam_f`, or `scripted:<path>`.
pub fn fixture(name: &str) -> Result<Fixture, SutError> {
    let graph = match name {
        "foocam_c" => ScreenGraph::from_document(&foocam_document(true))?,
        "foocam_f" => ScreenGraph::from_document(&foocam_document(false))?,
        other => match other.strip_prefix("scripted:") {
            Some(path) => ScreenGraph::load(path)?,
            None => return Err(SutError::UnknownFixture(other.to_string())),
        },
    };
    Ok(Fixture::from_graph(name, graph))
}

// ---------------------------------------------------------------------------
// Enforcement
// ---------------------------------------------------------------------------

/// A driver with an enforcer between the application and the platform.
/// Its event stream is the enforcer's output stream.
#[derive(Debug, Clone)]
pub struct EnforcedSut<D> {
    inner: D,
    enforcer: EnforcerState,
    consumed: BTreeMap<String, EventSymbol>,
}

/// Deploys `model` as an enforcer on `sut`.
pub fn attach_enforcer<D: Interceptable>(
    sut: D,
    model: Arc<EnforcerModel>,
) -> Result<EnforcedSut<D>, SutError> {
    let known = sut.event_names();
    let missing: Vec<String> = model
        .alphabet_names()
        .into_iter()
        .filter(|n| !known.contains(n))
        .collect();
    if !missing.is_empty() {
        return Err(SutError::AlphabetMismatch { missing });
    }
    let consumed = model
        .inputs()
        .iter()
        .chain(model.internals())
        .map(|s| (s.name().to_string(), s.clone()))
        .collect();
    Ok(EnforcedSut {
        inner: sut,
        enforcer: EnforcerState::new(model),
        consumed,
    })
}

impl<D> EnforcedSut<D> {
    pub fn inner(&self) -> &D {
        &self.inner
    }

    pub fn enforcer(&self) -> &EnforcerState {
        &self.enforcer
    }
}

impl<D: PartialEq> PartialEq for EnforcedSut<D> {
    fn eq(&self, other: &Self) -> bool {
        self.inner == other.inner && self.enforcer.current() == other.enforcer.current()
    }
}

impl<D: Eq> Eq for EnforcedSut<D> {}

impl<D: Hash> Hash for EnforcedSut<D> {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.inner.hash(state);
        self.enforcer.current().hash(state);
    }
}

impl<D: Interceptable> SutDriver for EnforcedSut<D> {
    fn reset(&mut self) -> GuiState {
        self.enforcer.reset();
        self.inner.reset()
    }

    fn observe(&self) -> GuiState {
        self.inner.observe()
    }

    fn available_actions(&self, state: &GuiState) -> Vec<UiAction> {
        self.inner.available_actions(state)
    }

    fn perform(&mut self, action: &UiAction) -> Result<Performed, SutError> {
        let requested = self.inner.request(action)?;
        let mut downstream = Vec::with_capacity(requested.len());
        for event in requested {
            match self.consumed.get(&event) {
                Some(symbol) => {
                    for out in self.enforcer.step(symbol)? {
                        self.inner.dispatch(out.name());
                        downstream.push(out.name().to_string());
                    }
                }
                None => {
                    self.inner.dispatch(&event);
                    downstream.push(event);
                }
            }
        }
        Ok(Performed {
            state: self.inner.observe(),
            events: downstream,
        })
    }

    fn event_names(&self) -> BTreeSet<String> {
        self.inner.event_names()
    }

    fn volatile_properties(&self) -> BTreeSet<String> {
        self.inner.volatile_properties()
    }
}

// ---------------------------------------------------------------------------
// Policies
// ---------------------------------------------------------------------------

type TraceFn = Arc<dyn Fn(&[String]) -> bool + Send + Sync>;

/// A named predicate over finite event traces.
#[derive(Clone)]
pub struct TracePredicate {
    name: String,
    eval: TraceFn,
}

impl TracePredicate {
    pub fn new(
        name: impl Into<String>,
        eval: impl Fn(&[String]) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            eval: Arc::new(eval),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn evaluate(&self, trace: &[String]) -> bool {
        (self.eval)(trace)
    }
}

impl fmt::Debug for TracePredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TracePredicate")
            .field("name", &self.name)
            .finish_non_exhaustive()
    }
}

pub fn evaluate_policy(pred: &TracePredicate, trace: &[String]) -> bool {
    pred.evaluate(trace)
}

/// An opened camera must be released before the activity is paused.
pub fn camera_release_policy() -> TracePredicate {
    TracePredicate::new("camera-release", |trace| {
        let mut held = false;
        for e in trace {
            match e.as_str() {
                CAMERA_OPEN => held = true,
                CAMERA_RELEASE => held = false,
                ACTIVITY_PAUSE if held => return false,
                _ => {}
            }
        }
        true
    })
}

/// Every distinct event trace produced by action walks of length up to
/// `depth` from the driver's current state, including the empty walk.
pub fn reachable_traces<D>(start: &D, depth: usize) -> Result<BTreeSet<Vec<String>>, SutError>
where
    D: SutDriver + Clone + Eq + Hash,
{
    let mut traces = BTreeSet::from([Vec::new()]);
    let mut frontier: HashSet<(D, Vec<String>)> = HashSet::from([(start.clone(), Vec::new())]);
    for _ in 0..depth {
        let mut next = HashSet::new();
        for (driver, trace) in &frontier {
            for action in driver.available_actions(&driver.observe()) {
                let mut d = driver.clone();
                let performed = d.perform(&action)?;
                let mut t = trace.clone();
                t.extend(performed.events);
                traces.insert(t.clone());
                next.insert((d, t));
            }
        }
        frontier = next;
    }
    Ok(traces)
}
