//! Command-line scenario runner and live console endpoint.

pub mod protocol;
pub mod serve;

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::net::{Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use fleetsim_core::batch::{run_batch, Job};
use fleetsim_core::engine::{run_headless, EngineError, LogOptions, RunSummary, Sim};
use fleetsim_core::families;
use fleetsim_core::log::{replay, LogError};
use fleetsim_core::scenario::{ScenarioConfig, ScenarioError};

/// Exit status for a clean run.
pub const EXIT_OK: u8 = 0;
/// A safety invariant was violated during the run.
pub const EXIT_VIOLATION: u8 = 2;
/// The scenario file could not be loaded or failed validation.
pub const EXIT_CONFIG: u8 = 3;
/// Log, socket or other runtime failure.
pub const EXIT_RUNTIME: u8 = 4;
/// A replayed log does not reproduce its recorded digest.
pub const EXIT_MISMATCH: u8 = 5;

#[derive(Debug, Parser)]
#[command(name = "fleetsim", version, about = "Crawler-carrier fleet simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario, headless or with a live console endpoint.
    Run(RunArgs),
    /// Fold a log and check its recorded digest.
    Replay {
        log: PathBuf,
    },
    /// Run many seeds of a built-in scenario family.
    Batch(BatchArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub seed: u64,
    /// Run as fast as possible without an endpoint (the default).
    #[arg(long, conflicts_with = "serve")]
    pub headless: bool,
    /// Serve the console endpoint on this port and pace the run in wall-clock time.
    #[arg(long)]
    pub serve: Option<u16>,
    /// Where to write the event log; defaults to `<scenario>.seed<N>.ndjson`.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Wall-clock pacing multiplier for serve mode.
    #[arg(long, default_value_t = 1.0, requires = "serve")]
    pub speed: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Family {
    Stopping,
    Crossing,
    Outage,
    Intrusion,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    #[arg(long, value_enum)]
    pub family: Family,
    #[arg(long, default_value_t = 100)]
    pub runs: u64,
    #[arg(long, default_value_t = 0)]
    pub first_seed: u64,
    /// Run one scenario after another instead of in parallel.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("speed must be positive, got {0}")]
    Speed(f64),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Scenario(_) | CliError::Speed(_) => EXIT_CONFIG,
            _ => EXIT_RUNTIME,
        }
    }
}

fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

/// Printed to stdout when a run ends.
#[derive(Debug, Serialize)]
pub struct Report<'a> {
    pub scenario: &'a str,
    pub log: &'a Path,
    #[serde(flatten)]
    pub summary: &'a RunSummary,
}

pub fn default_log_path(scenario: &Path, seed: u64) -> PathBuf {
    let stem = scenario.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
    PathBuf::from(format!("{stem}.seed{seed}.ndjson"))
}

fn log_options(path: &Path) -> Result<LogOptions, CliError> {
    let file = File::create(path).map_err(io(format!("cannot create log {}", path.display())))?;
    Ok(LogOptions {
        keep_records: false,
        keep_lines: false,
        writer: Some(Box::new(BufWriter::new(file))),
    })
}

fn exit_for(summary: &RunSummary) -> u8 {
    if summary.violations.is_empty() {
        EXIT_OK
    } else {
        EXIT_VIOLATION
    }
}

fn report(cfg: &ScenarioConfig, log: &Path, summary: &RunSummary) {
    let r = Report {
        scenario: &cfg.name,
        log,
        summary,
    };
    println!("{}", serde_json::to_string(&r).expect("report serializes"));
}

pub fn run_scenario(args: &RunArgs) -> Result<u8, CliError> {
    let cfg = ScenarioConfig::load(&args.scenario)?;
    let log = args.log.clone().unwrap_or_else(|| default_log_path(&args.scenario, args.seed));
    let summary = match args.serve {
        None => run_headless(&cfg, args.seed, log_options(&log)?)?.0,
        Some(port) => {
            if !(args.speed.is_finite() && args.speed > 0.0) {
                return Err(CliError::Speed(args.speed));
            }
            let sim = Sim::new(&cfg, args.seed, log_options(&log)?)?;
            let rt = tokio::runtime::Runtime::new().map_err(io("cannot start runtime"))?;
            rt.block_on(async {
                let bind = SocketAddr::from((Ipv4Addr::UNSPECIFIED, port));
                let running = serve::start(sim, bind, args.speed)
                    .await
                    .map_err(io(format!("cannot listen on port {port}")))?;
                tokio::select! {
                    _ = tokio::signal::ctrl_c() => running.stop(),
                    _ = std::future::pending::<()>() => {}
                }
                Ok::<_, CliError>(running.wait().await?.0)
            })?
        }
    };
    report(&cfg, &log, &summary);
    Ok(exit_for(&summary))
}

#[derive(Debug, Serialize)]
struct ReplayReport {
    digest: String,
    recorded_digest: Option<String>,
    matches: bool,
    last_seq: Option<u64>,
}

pub fn replay_log(path: &Path) -> Result<u8, CliError> {
    let file = File::open(path).map_err(io(format!("cannot open log {}", path.display())))?;
    let r = replay(BufReader::new(file))?;
    let out = ReplayReport {
        matches: r.matches(),
        last_seq: r.state.last_seq,
        digest: r.digest,
        recorded_digest: r.recorded_digest,
    };
    println!("{}", serde_json::to_string(&out).expect("report serializes"));
    Ok(if out.matches { EXIT_OK } else { EXIT_MISMATCH })
}

#[derive(Debug, Serialize)]
struct BatchReport {
    family: String,
    runs: usize,
    violations: usize,
    errors: usize,
    worst_goal_error: f64,
    parallel: bool,
}

pub fn batch(args: &BatchArgs) -> u8 {
    let make = match args.family {
        Family::Stopping => families::stopping,
        Family::Crossing => families::crossing,
        Family::Outage => families::outage,
        Family::Intrusion => families::intrusion,
    };
    let jobs: Vec<Job> = (args.first_seed..args.first_seed + args.runs)
        .map(|seed| Job { config: make(seed), seed })
        .collect();
    let results = run_batch(&jobs, !args.sequential);
    let mut out = BatchReport {
        family: format!("{:?}", args.family).to_lowercase(),
        runs: results.len(),
        violations: 0,
        errors: 0,
        worst_goal_error: 0.0,
        parallel: !args.sequential && fleetsim_core::par::is_parallel(),
    };
    for (job, r) in jobs.iter().zip(&results) {
        match r {
            Ok(s) => {
                if !s.violations.is_empty() {
                    out.violations += 1;
                    eprintln!("seed {}: {:?}", job.seed, s.violations);
                }
                let worst = s.goal_errors.values().copied().fold(0.0, f64::max);
                out.worst_goal_error = out.worst_goal_error.max(worst);
            }
            Err(e) => {
                out.errors += 1;
                eprintln!("seed {}: {e}", job.seed);
            }
        }
    }
    println!("{}", serde_json::to_string(&out).expect("report serializes"));
    match (out.errors, out.violations) {
        (0, 0) => EXIT_OK,
        (0, _) => EXIT_VIOLATION,
        _ => EXIT_RUNTIME,
    }
}

/// Runs a parsed command line and returns the process exit status.
pub fn execute(cli: Cli) -> u8 {
    let result = match &cli.command {
        Command::Run(args) => run_scenario(args),
        Command::Replay { log } => replay_log(log),
        Command::Batch(args) => Ok(batch(args)),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
