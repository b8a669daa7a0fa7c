//! Many independent headless runs, in parallel or one after another.

use crate::engine::{run_headless, EngineError, LogOptions, RunSummary};
use crate::par;
use crate::scenario::ScenarioConfig;

pub struct Job {
    pub config: ScenarioConfig,
    pub seed: u64,
}

fn one(job: &Job) -> Result<RunSummary, String> {
    run_headless(&job.config, job.seed, LogOptions::none())
        .map(|(s, _)| s)
        .map_err(|e: EngineError| e.to_string())
}

/// Runs every job; results keep the job order whichever mode is used.
pub fn run_batch(jobs: &[Job], parallel: bool) -> Vec<Result<RunSummary, String>> {
    if parallel {
        par::map(jobs, one)
    } else {
        par::map_sequential(jobs, one)
    }
}
