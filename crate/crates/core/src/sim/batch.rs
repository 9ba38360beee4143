use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::record::Summary;
use super::scenario::Scenario;
use super::world::{run, RunOverrides};
use super::SimError;
use crate::safety::Mode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub scenario: String,
    pub mode: Mode,
    pub runs: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub violations: usize,
    pub all_optimal_runs: usize,
    pub mean_frequency_hz: f64,
    pub mean_min_h: f64,
    pub worst_min_h: f64,
    pub mean_trajectory_length: f64,
    pub mean_active_rows: f64,
    pub mean_total_rows: f64,
}

impl Aggregate {
    /// Order-independent: sums are taken over summaries sorted by seed.
    pub fn from_summaries(scenario: &str, mode: Mode, runs: &[Summary]) -> Self {
        let mut runs: Vec<&Summary> = runs.iter().collect();
        runs.sort_by_key(|s| s.seed);
        let n = runs.len().max(1) as f64;
        let mean = |f: fn(&Summary) -> f64| runs.iter().map(|s| f(s)).sum::<f64>() / n;
        let successes = runs.iter().filter(|s| s.success).count();
        Self {
            scenario: scenario.to_string(),
            mode,
            runs: runs.len(),
            successes,
            success_rate: successes as f64 / n,
            violations: runs.iter().filter(|s| s.violated()).count(),
            all_optimal_runs: runs.iter().filter(|s| s.all_optimal).count(),
            mean_frequency_hz: mean(|s| s.timing.mean_frequency_hz),
            mean_min_h: mean(|s| s.min_h),
            worst_min_h: runs.iter().map(|s| s.min_h).fold(f64::INFINITY, f64::min),
            mean_trajectory_length: mean(|s| s.trajectory_length),
            mean_active_rows: mean(|s| s.mean_active_rows),
            mean_total_rows: mean(|s| s.mean_total_rows),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchResult {
    pub aggregates: Vec<Aggregate>,
    pub runs: Vec<Summary>,
}

/// Runs seeds `base, base+1, …, base+n_runs−1` for every mode on a pool of
/// `jobs` threads (all cores if 0).
pub fn monte_carlo(
    scenario: &Scenario,
    modes: &[Mode],
    n_runs: usize,
    overrides: &RunOverrides,
    jobs: usize,
) -> Result<BatchResult, SimError> {
    if n_runs == 0 {
        return Err(SimError::Config { field: "runs".into(), msg: "at least one run is required".into() });
    }
    let base = overrides.seed.unwrap_or(scenario.seed);
    let tasks: Vec<(Mode, u64)> =
        modes.iter().flat_map(|&m| (0..n_runs as u64).map(move |k| (m, base.wrapping_add(k)))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| SimError::Config { field: "jobs".into(), msg: e.to_string() })?;
    let quiet = RunOverrides { keep_series: false, debug_dir: None, ..overrides.clone() };
    let runs: Vec<Summary> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(mode, seed)| {
                run(scenario, mode, &RunOverrides { seed: Some(seed), ..quiet.clone() }).map(|r| r.summary)
            })
            .collect::<Result<_, _>>()
    })?;
    let aggregates = modes
        .iter()
        .map(|&m| {
            let mine: Vec<Summary> = runs.iter().filter(|s| s.mode == m).cloned().collect();
            Aggregate::from_summaries(&scenario.name, m, &mine)
        })
        .collect();
    Ok(BatchResult { aggregates, runs })
}
