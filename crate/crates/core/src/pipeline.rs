//! Chains the stages and reads and writes their JSON artifacts.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

use crate::automaton::{format_sequence, EnforcerModel, EventSymbol};
use crate::diffrun::{run_suite, VerdictReport};
use crate::hsi::{canonical_cmp, generate_sequences, TestSequence};
use crate::ripping::{rip, RipConfig, RippingModel};
use crate::sut::{
    camera_release_policy, fixture, Fixture, TracePredicate, CAMERA_OPEN, CAMERA_RELEASE,
};
use crate::testgen::{generate_suite, monitored_alphabet, Coverage, CoverageReport, Oracle};

pub const DEFAULT_BUDGET: usize = 750;

pub const SEQUENCES_FILE: &str = "sequences.json";
pub const MODEL_FILE: &str = "model.json";
pub const SUITE_FILE: &str = "suite.json";
pub const VERDICTS_FILE: &str = "verdicts.json";
pub const SUMMARY_FILE: &str = "summary.md";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Sequences,
    Rip,
    Gen,
    Run,
    Report,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Sequences => "sequences",
            Stage::Rip => "rip",
            Stage::Gen => "gen",
            Stage::Run => "run",
            Stage::Report => "report",
        })
    }
}

#[derive(Debug, Error)]
#[error("{stage} stage failed: {message}")]
pub struct PipelineError {
    pub stage: Stage,
    pub message: String,
}

impl PipelineError {
    fn new(stage: Stage, err: impl fmt::Display) -> Self {
        Self {
            stage,
            message: err.to_string(),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReportError {
    #[error("sequence {0} appears in the suite but not in the sequence set")]
    UnknownInSuite(String),
    #[error("sequence {0} has no suite entry")]
    MissingFromSuite(String),
    #[error("sequence {0} has a verdict but no covered test")]
    UnexpectedVerdict(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineConfig {
    pub enforcer: PathBuf,
    /// Built-in fixture name or `scripted:<path>`.
    pub fixture: String,
    pub budget: usize,
    pub candidates: usize,
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    pub strict_warnings: bool,
}

impl PipelineConfig {
    pub fn new(
        enforcer: impl Into<PathBuf>,
        fixture: impl Into<String>,
        out_dir: impl Into<PathBuf>,
    ) -> Self {
        Self {
            enforcer: enforcer.into(),
            fixture: fixture.into(),
            budget: DEFAULT_BUDGET,
            candidates: crate::testgen::DEFAULT_CANDIDATES,
            seed: None,
            out_dir: out_dir.into(),
            strict_warnings: false,
        }
    }

    /// Loads everything the stages need, before any of them runs.
    pub fn validate(&self) -> Result<(EnforcerModel, Fixture), PipelineError> {
        if self.budget == 0 {
            return Err(PipelineError::new(
                Stage::Config,
                "rip budget must be positive",
            ));
        }
        if self.candidates == 0 {
            return Err(PipelineError::new(
                Stage::Config,
                "candidate count must be positive",
            ));
        }
        let enf = EnforcerModel::load(&self.enforcer).map_err(|e| {
            PipelineError::new(Stage::Config, format!("{}: {e}", self.enforcer.display()))
        })?;
        let fx = fixture(&self.fixture).map_err(|e| PipelineError::new(Stage::Config, e))?;
        Ok((enf, fx))
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub sequences: Vec<TestSequence>,
    pub model: RippingModel,
    pub suite: CoverageReport,
    pub verdicts: VerdictReport,
    pub summary: String,
    pub exit_code: i32,
}

pub fn sequences_to_json(seqs: &[TestSequence]) -> String {
    serde_json::to_string_pretty(seqs).expect("sequences always serialize")
}

pub fn load_sequences(path: impl AsRef<Path>) -> Result<Vec<TestSequence>, String> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn write_artifact(dir: &Path, name: &str, text: &str, stage: Stage) -> Result<(), PipelineError> {
    let path = dir.join(name);
    let mut body = text.to_string();
    if !body.ends_with('\n') {
        body.push('\n');
    }
    fs::write(&path, body)
        .map_err(|e| PipelineError::new(stage, format!("{}: {e}", path.display())))
}

/// Policies that make sense for the enforcer's alphabet.
pub fn predicates_for(enf: &EnforcerModel) -> Vec<TracePredicate> {
    let names = enf.alphabet_names();
    if names.contains(CAMERA_OPEN) && names.contains(CAMERA_RELEASE) {
        vec![camera_release_policy()]
    } else {
        Vec::new()
    }
}

/// Runs every stage and writes its artifact to `cfg.out_dir` as soon as it
/// is produced, so a failing stage leaves the earlier artifacts in place.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutcome, PipelineError> {
    let (enf, fx) = cfg.validate()?;
    fs::create_dir_all(&cfg.out_dir).map_err(|e| {
        PipelineError::new(Stage::Config, format!("{}: {e}", cfg.out_dir.display()))
    })?;
    let dir = cfg.out_dir.as_path();

    let sequences = generate_sequences(&enf);
    write_artifact(
        dir,
        SEQUENCES_FILE,
        &sequences_to_json(&sequences),
        Stage::Sequences,
    )?;

    let rip_cfg = RipConfig {
        budget: cfg.budget,
        seed: cfg.seed,
        alphabet: Some(monitored_alphabet(&enf)),
    };
    let model = rip(&mut fx.driver(), &rip_cfg).map_err(|e| PipelineError::new(Stage::Rip, e))?;
    write_artifact(dir, MODEL_FILE, &model.to_json(), Stage::Rip)?;

    let suite = generate_suite(|| fx.driver(), &model, &enf, &sequences, cfg.candidates)
        .map_err(|e| PipelineError::new(Stage::Gen, e))?;
    write_artifact(dir, SUITE_FILE, &suite.to_json(), Stage::Gen)?;

    let enf = Arc::new(enf);
    let verdicts = run_suite(
        &suite,
        || fx.driver(),
        Arc::clone(&enf),
        &predicates_for(&enf),
    );
    write_artifact(dir, VERDICTS_FILE, &verdicts.to_json(), Stage::Run)?;

    let table = render_report(&sequences, &suite, &verdicts)
        .map_err(|e| PipelineError::new(Stage::Report, e))?;
    let summary = format!("{table}\n{}\n", summary_line(&sequences, &suite, &verdicts));
    write_artifact(dir, SUMMARY_FILE, &summary, Stage::Report)?;

    Ok(PipelineOutcome {
        exit_code: verdicts.exit_code(cfg.strict_warnings),
        sequences,
        model,
        suite,
        verdicts,
        summary,
    })
}

pub fn summary_line(
    seqs: &[TestSequence],
    suite: &CoverageReport,
    verdicts: &VerdictReport,
) -> String {
    let c = verdicts.counts;
    format!(
        "{} sequences, {} covered, {} infeasible, {} not found; {} pass, {} fail, {} warning, {} error",
        seqs.len(),
        suite.count("covered"),
        suite.count("infeasible"),
        suite.count("not_found"),
        c.pass,
        c.fail,
        c.warning,
        c.errors
    )
}

fn cell(text: &str) -> String {
    text.replace('|', "\\|").replace('\n', " ")
}

/// Markdown table with one row per sequence in canonical order.
pub fn render_report(
    seqs: &[TestSequence],
    suite: &CoverageReport,
    verdicts: &VerdictReport,
) -> Result<String, ReportError> {
    let known: BTreeSet<&[EventSymbol]> = seqs.iter().map(|s| s.events.as_slice()).collect();
    for e in &suite.entries {
        if !known.contains(e.sequence.events.as_slice()) {
            return Err(ReportError::UnknownInSuite(e.sequence.label()));
        }
    }
    for v in &verdicts.verdicts {
        let covered = suite
            .entries
            .iter()
            .any(|e| e.sequence.events == v.sequence && e.test().is_some());
        if !covered {
            return Err(ReportError::UnexpectedVerdict(format_sequence(&v.sequence)));
        }
    }

    let mut ordered: Vec<&TestSequence> = seqs.iter().collect();
    ordered.sort_by(|a, b| canonical_cmp(&a.events, &b.events));
    let mut out =
        String::from("| sequence | status | reason | oracle | verdict |\n|---|---|---|---|---|\n");
    for ts in ordered {
        let entry = suite
            .entries
            .iter()
            .find(|e| e.sequence.events == ts.events)
            .ok_or_else(|| ReportError::MissingFromSuite(ts.label()))?;
        let (reason, oracle) = match &entry.coverage {
            Coverage::Covered { test, .. } => {
                let actions: Vec<String> = test.actions.iter().map(ToString::to_string).collect();
                let oracle = match test.oracle {
                    Oracle::Transparent => "transparent".to_string(),
                    Oracle::Actual { divergence_index } => format!("actual({divergence_index})"),
                };
                (actions.join(", "), oracle)
            }
            Coverage::Infeasible { reason, .. } => (reason.clone(), "-".to_string()),
            Coverage::NotFound {
                candidates_tried, ..
            } => (
                format!("none of {candidates_tried} candidates replayed"),
                "-".to_string(),
            ),
        };
        let verdict = match verdicts.find(&ts.events) {
            Some(v) => match (&v.verdict, &v.error) {
                (Some(v), _) => v.outcome.as_str(),
                (None, _) => "error",
            },
            None => "-",
        };
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} |\n",
            cell(&ts.label()),
            entry.status(),
            cell(&reason),
            oracle,
            verdict
        ));
    }
    Ok(out)
}
