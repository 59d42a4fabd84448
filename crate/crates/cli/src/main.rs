//! `promise-info`: validate, run and analyse promise scenarios.
//!
//! Exit status is 0 on success, 1 when inputs cannot be read, parsed or
//! validated, and 2 when a scenario's own expectations are not met.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use promise_info::scenario::{analyze, corpus, parse_scenario, Report, Scenario, CORPUS_ENV};
use promise_info::sim::run;
use promise_info::EventLog;

#[derive(Parser)]
#[command(name = "promise-info", version, about = "Simulate and analyse promise-bound agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a scenario file.
    Validate {
        /// Scenario file, or the name of a corpus scenario.
        scenario: String,
    },
    /// Run a scenario and write its event log.
    Run {
        scenario: String,
        /// Overrides the seed in the file.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the tick count in the file.
        #[arg(long)]
        ticks: Option<u64>,
        /// Output path; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Analyse an event log against the scenario that produced it.
    Analyze {
        log: PathBuf,
        scenario: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = TableFormat::Json)]
        format: TableFormat,
    },
    /// Render a JSON report for people.
    Report {
        report: PathBuf,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        format: ReportFormat,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
    Csv,
}

/// Marks a run whose only problem is unmet scenario expectations.
#[derive(Debug)]
struct ExpectationsFailed;

impl std::fmt::Display for ExpectationsFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("scenario expectations not met")
    }
}

impl std::error::Error for ExpectationsFailed {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<ExpectationsFailed>() => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Validate { scenario } => {
            let s = load_scenario(&scenario)?;
            println!(
                "{}: ok ({} agents, {} promises, {} policies, {} analyses, {} expectations)",
                s.name,
                s.graph.agents().len(),
                s.graph.len(),
                s.policies.len(),
                s.analysis.len(),
                s.expectations.len()
            );
            Ok(())
        }
        Command::Run { scenario, seed, ticks, out } => {
            let s = load_scenario(&scenario)?;
            let log = run(&s, seed.unwrap_or(s.seed), ticks.unwrap_or(s.ticks))?;
            emit(out.as_deref(), &log.to_text())
        }
        Command::Analyze { log, scenario, out, format } => {
            let s = load_scenario(&scenario)?;
            let text = fs::read_to_string(&log).with_context(|| format!("reading {}", log.display()))?;
            let log_data = EventLog::from_text(&text).with_context(|| format!("parsing {}", log.display()))?;
            if log_data.scenario_hash != s.hash() {
                bail!(
                    "{} was produced by a different scenario (hash {}, expected {})",
                    log.display(),
                    log_data.scenario_hash,
                    s.hash()
                );
            }
            let report = analyze(&s, &log_data);
            let body = match format {
                TableFormat::Json => report.to_json(),
                TableFormat::Csv => report.to_csv(),
            };
            emit(out.as_deref(), &body)?;
            for v in report.verdicts.iter().filter(|v| !v.passed) {
                eprintln!("{v}");
            }
            if report.all_met() {
                Ok(())
            } else {
                Err(ExpectationsFailed.into())
            }
        }
        Command::Report { report, format } => {
            let text = fs::read_to_string(&report).with_context(|| format!("reading {}", report.display()))?;
            let r = Report::from_json(&text).with_context(|| format!("parsing {}", report.display()))?;
            let body = match format {
                ReportFormat::Text => r.to_text(),
                ReportFormat::Json => r.to_json(),
                ReportFormat::Csv => r.to_csv(),
            };
            emit(None, &body)
        }
    }
}

/// Reads a scenario from a path, falling back to a corpus name.
fn load_scenario(arg: &str) -> Result<Scenario> {
    let path = Path::new(arg);
    let text = if path.exists() {
        fs::read_to_string(path).with_context(|| format!("reading {arg}"))?
    } else if let Some(text) = corpus(arg) {
        text
    } else {
        bail!("no file {arg} and no corpus scenario of that name (corpus root from {CORPUS_ENV})");
    };
    parse_scenario(&text).map_err(|diags| {
        for d in &diags {
            eprintln!("{arg}: {d}");
        }
        anyhow::anyhow!("{arg}: {} problem(s)", diags.len())
    })
}

/// Writes to `out` atomically, or to standard output.
fn emit(out: Option<&Path>, body: &str) -> Result<()> {
    match out {
        None => {
            std::io::stdout().lock().write_all(body.as_bytes())?;
            Ok(())
        }
        Some(path) => write_atomic(path, body).with_context(|| format!("writing {}", path.display())),
    }
}

/// Writes a sibling temporary file and renames it over `path`, so readers
/// never see a partial file.
fn write_atomic(path: &Path, body: &str) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(body.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}
