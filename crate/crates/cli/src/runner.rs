use std::time::Instant;

use mec_placer::{
    derive_seed, feasibility_check, metrics, HyperParams, MetricsReport, Solution, SolverRegistry,
    Topology,
};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::failure::Failure;

/// Caps how many algorithms `compare` runs at once.
pub const THREADS_ENV: &str = "MEC_PLACER_THREADS";

#[derive(Debug)]
pub struct Outcome {
    pub algorithm: String,
    pub seed: u64,
    pub hp: HyperParams,
    pub solution: Solution,
    pub report: MetricsReport,
    pub runtime_ms: Option<f64>,
}

pub fn thread_limit() -> Result<usize, Failure> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&t| t > 0)
            .ok_or_else(|| {
                Failure::Config(format!(
                    "{THREADS_ENV} must be a positive integer, got `{v}`"
                ))
            }),
        Err(_) => Ok(0),
    }
}

/// Runs every configured algorithm on `topo`, concurrently up to
/// `threads` (0 = one per core). Results come back in configuration order.
pub fn solve_all(
    topo: &Topology,
    cfg: &RunConfig,
    threads: usize,
    timing: bool,
) -> Result<Vec<Outcome>, Failure> {
    let registry = SolverRegistry::builtin(cfg.ga);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::Internal(e.to_string()))?;
    pool.install(|| {
        cfg.algorithms
            .par_iter()
            .map(|name| solve_one(&registry, topo, cfg, name, timing))
            .collect()
    })
}

fn solve_one(
    registry: &SolverRegistry,
    topo: &Topology,
    cfg: &RunConfig,
    name: &str,
    timing: bool,
) -> Result<Outcome, Failure> {
    let solver = registry.get(name)?;
    let hp = cfg.hyper_params(name);
    let seed = derive_seed(cfg.seed, name);
    let start = Instant::now();
    let solution = solver.solve(topo, &hp, seed)?;
    let elapsed = start.elapsed();

    let violations = feasibility_check(&solution.placement, topo, &hp);
    if let Some(v) = violations.first() {
        return Err(Failure::Internal(format!(
            "{name} emitted an infeasible placement ({} violations, first: {v})",
            violations.len()
        )));
    }
    let report = metrics(&solution.placement, topo)?;
    Ok(Outcome {
        algorithm: name.to_string(),
        seed,
        hp,
        solution,
        report,
        runtime_ms: timing.then_some(elapsed.as_secs_f64() * 1e3),
    })
}
