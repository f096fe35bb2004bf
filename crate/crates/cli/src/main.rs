use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use enftest::automaton::{format_sequence, EnforcerModel};
use enftest::diffrun::{run_suite, VerdictReport};
use enftest::hsi::derive;
use enftest::pipeline::{
    load_sequences, predicates_for, render_report, run_pipeline, sequences_to_json, summary_line,
    PipelineConfig, DEFAULT_BUDGET, MODEL_FILE, SEQUENCES_FILE, SUITE_FILE, SUMMARY_FILE,
    VERDICTS_FILE,
};
use enftest::ripping::{rip, RipConfig, RippingModel};
use enftest::sut::{fixture, BUILTIN_FIXTURES};
use enftest::testgen::{generate_suite, monitored_alphabet, CoverageReport, DEFAULT_CANDIDATES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

/// Generate and run differential GUI tests for software enforcers.
#[derive(Debug, Parser)]
#[command(name = "enftest", version)]
struct Cli {
    /// Directory for artifacts written without an explicit --out.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Seed for the exploration order.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output format on stdout.
    #[arg(long, global = true, value_enum, default_value = "text")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Derive the input sequences to cover from an enforcer model.
    Sequences {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Inspect the built-in fixtures.
    Fixtures {
        #[command(subcommand)]
        action: FixturesAction,
    },
    /// Explore a fixture and write its GUI model.
    Rip {
        #[arg(long)]
        fixture: String,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
        /// Record only the events of this enforcer on transitions.
        #[arg(long)]
        enforcer: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Turn sequences into concrete tests with oracles.
    Gen {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        enforcer: PathBuf,
        #[arg(long)]
        fixture: String,
        /// Sequences file; derived from the enforcer when absent.
        #[arg(long)]
        sequences: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_CANDIDATES)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Execute a suite with and without the enforcer.
    Run {
        #[arg(long)]
        suite: PathBuf,
        #[arg(long)]
        fixture: String,
        #[arg(long)]
        enforcer: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit nonzero on warnings too.
        #[arg(long)]
        strict_warnings: bool,
    },
    /// Run every stage and write all artifacts to --out-dir.
    Pipeline {
        #[arg(long)]
        enforcer: PathBuf,
        #[arg(long)]
        fixture: String,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
        #[arg(long, default_value_t = DEFAULT_CANDIDATES)]
        n: usize,
        #[arg(long)]
        strict_warnings: bool,
    },
    /// Render a summary table from saved artifacts.
    Report {
        #[arg(long)]
        sequences: PathBuf,
        #[arg(long)]
        suite: PathBuf,
        #[arg(long)]
        verdicts: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum FixturesAction {
    List,
}

impl Cli {
    /// Where an artifact goes: --out, else --out-dir/default, else stdout.
    fn target(&self, out: &Option<PathBuf>, default: &str) -> Option<PathBuf> {
        out.clone()
            .or_else(|| self.out_dir.as_ref().map(|d| d.join(default)))
    }
}

fn emit(
    target: Option<PathBuf>,
    json: &str,
    text: impl FnOnce() -> String,
    format: Format,
) -> Result<()> {
    match target {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)
                    .with_context(|| format!("cannot create {}", parent.display()))?;
            }
            fs::write(&path, format!("{json}\n"))
                .with_context(|| format!("cannot write {}", path.display()))?;
            if format == Format::Text {
                println!("{}", text());
                println!("wrote {}", path.display());
            }
        }
        None => match format {
            Format::Json => println!("{json}"),
            Format::Text => println!("{}", text()),
        },
    }
    Ok(())
}

fn load_enforcer(path: &Path) -> Result<EnforcerModel> {
    EnforcerModel::load(path).with_context(|| format!("cannot load enforcer {}", path.display()))
}

fn run(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Sequences { model, out } => {
            let enf = load_enforcer(model)?;
            let suite = derive(&enf);
            for d in suite.diagnostics() {
                eprintln!("warning: {d}");
            }
            let text = || {
                suite
                    .sequences
                    .iter()
                    .map(|s| {
                        format!(
                            "{}\t(cover {}, separator {})",
                            s.label(),
                            format_sequence(&s.provenance.cover),
                            format_sequence(&s.provenance.separator)
                        )
                    })
                    .collect::<Vec<_>>()
                    .join("\n")
            };
            emit(
                cli.target(out, SEQUENCES_FILE),
                &sequences_to_json(&suite.sequences),
                text,
                cli.format,
            )?;
        }
        Command::Fixtures {
            action: FixturesAction::List,
        } => match cli.format {
            Format::Json => {
                let list: serde_json::Map<String, serde_json::Value> = BUILTIN_FIXTURES
                    .iter()
                    .map(|(n, d)| (n.to_string(), serde_json::Value::from(*d)))
                    .collect();
                println!("{}", serde_json::to_string_pretty(&list)?);
            }
            Format::Text => {
                for (name, desc) in BUILTIN_FIXTURES {
                    println!("{name}\t{desc}");
                }
                println!("scripted:<path>\tscreen graph loaded from a JSON file");
            }
        },
        Command::Rip {
            fixture: name,
            budget,
            enforcer,
            out,
        } => {
            let fx = fixture(name)?;
            let alphabet = match enforcer {
                Some(p) => Some(monitored_alphabet(&load_enforcer(p)?)),
                None => None,
            };
            let cfg = RipConfig {
                budget: *budget,
                seed: cli.seed,
                alphabet,
            };
            let model = rip(&mut fx.driver(), &cfg)?;
            for d in &model.meta.diagnostics {
                eprintln!("warning: {d}");
            }
            let text = || {
                format!(
                    "{} states, {} transitions, {} actions executed{}",
                    model.states.len(),
                    model.transitions.len(),
                    model.meta.actions_executed,
                    if model.meta.complete {
                        ""
                    } else {
                        " (budget exhausted)"
                    }
                )
            };
            emit(
                cli.target(out, MODEL_FILE),
                &model.to_json(),
                text,
                cli.format,
            )?;
        }
        Command::Gen {
            model,
            enforcer,
            fixture: name,
            sequences,
            n,
            out,
        } => {
            if *n == 0 {
                bail!("--n must be positive");
            }
            let ripped = RippingModel::load(model)
                .with_context(|| format!("cannot load GUI model {}", model.display()))?;
            let enf = load_enforcer(enforcer)?;
            let seqs = match sequences {
                Some(p) => load_sequences(p).map_err(anyhow::Error::msg)?,
                None => derive(&enf).sequences,
            };
            let fx = fixture(name)?;
            let suite = generate_suite(|| fx.driver(), &ripped, &enf, &seqs, *n)?;
            let text = || {
                format!(
                    "{} sequences: {} covered, {} infeasible, {} not found",
                    suite.entries.len(),
                    suite.count("covered"),
                    suite.count("infeasible"),
                    suite.count("not_found")
                )
            };
            emit(
                cli.target(out, SUITE_FILE),
                &suite.to_json(),
                text,
                cli.format,
            )?;
        }
        Command::Run {
            suite,
            fixture: name,
            enforcer,
            out,
            strict_warnings,
        } => {
            let report = CoverageReport::load(suite)
                .with_context(|| format!("cannot load suite {}", suite.display()))?;
            let enf = Arc::new(load_enforcer(enforcer)?);
            let fx = fixture(name)?;
            let verdicts = run_suite(
                &report,
                || fx.driver(),
                Arc::clone(&enf),
                &predicates_for(&enf),
            );
            let text = || {
                let c = verdicts.counts;
                let mut lines = vec![format!(
                    "{} pass, {} fail, {} warning, {} error",
                    c.pass, c.fail, c.warning, c.errors
                )];
                for v in &verdicts.verdicts {
                    let detail = match (&v.verdict, &v.error) {
                        (Some(v), _) => format!("{}: {}", v.outcome.as_str(), v.evidence.summary),
                        (None, Some(e)) => format!("error: {e}"),
                        (None, None) => "error".into(),
                    };
                    lines.push(format!("{}\t{detail}", format_sequence(&v.sequence)));
                }
                lines.join("\n")
            };
            emit(
                cli.target(out, VERDICTS_FILE),
                &verdicts.to_json(),
                text,
                cli.format,
            )?;
            return Ok(verdicts.exit_code(*strict_warnings) as u8);
        }
        Command::Pipeline {
            enforcer,
            fixture: name,
            budget,
            n,
            strict_warnings,
        } => {
            let cfg = PipelineConfig {
                enforcer: enforcer.clone(),
                fixture: name.clone(),
                budget: *budget,
                candidates: *n,
                seed: cli.seed,
                out_dir: cli.out_dir.clone().unwrap_or_else(|| PathBuf::from(".")),
                strict_warnings: *strict_warnings,
            };
            let outcome = run_pipeline(&cfg)?;
            match cli.format {
                Format::Text => print!("{}", outcome.summary),
                Format::Json => println!("{}", outcome.verdicts.to_json()),
            }
            return Ok(outcome.exit_code as u8);
        }
        Command::Report {
            sequences,
            suite,
            verdicts,
            out,
        } => {
            let seqs = load_sequences(sequences).map_err(anyhow::Error::msg)?;
            let suite = CoverageReport::load(suite)
                .with_context(|| format!("cannot load suite {}", suite.display()))?;
            let verdicts = VerdictReport::load(verdicts)
                .with_context(|| format!("cannot load verdicts {}", verdicts.display()))?;
            let table = render_report(&seqs, &suite, &verdicts)?;
            let summary = format!("{table}\n{}\n", summary_line(&seqs, &suite, &verdicts));
            match out
                .clone()
                .or_else(|| cli.out_dir.as_ref().map(|d| d.join(SUMMARY_FILE)))
            {
                Some(path) => fs::write(&path, &summary)
                    .with_context(|| format!("cannot write {}", path.display()))?,
                None => print!("{summary}"),
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
