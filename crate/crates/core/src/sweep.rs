//! Batch execution: many lockstep runs or many radar scans at once.
//!
//! With the `parallel` feature (on by default) [`Exec::Parallel`] spreads the
//! batch over the rayon thread pool. Without it, both variants run on the
//! calling thread. Results are always returned in input order.

use crate::harness::{compute_metrics, run_lockstep, EndReason, Metrics, RunError, Scenario};
use crate::sensors::{radar_scan, RadarDetection, RadarParams};
use crate::world::World;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// Whether `Parallel` actually runs in parallel in this build.
    pub const fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }
}

fn map_exec<T, R, F>(items: &[T], exec: Exec, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedOutcome {
    pub seed: u64,
    pub end: EndReason,
    pub metrics: Metrics,
}

/// Runs `scenario` once per seed.
pub fn sweep_seeds(
    scenario: &Scenario,
    seeds: &[u64],
    exec: Exec,
) -> Result<Vec<SeedOutcome>, RunError> {
    map_exec(seeds, exec, |&seed| {
        let out = run_lockstep(&scenario.clone().with_seed(seed))?;
        let metrics = compute_metrics(&out.records, scenario.guidance.v_stop_eps)
            .expect("a run logs at least one tick");
        Ok(SeedOutcome {
            seed,
            end: out.end,
            metrics,
        })
    })
    .into_iter()
    .collect()
}

/// One radar scan per world, each with its own ego speed.
pub fn scan_batch(
    scenes: &[(World, f64)],
    params: &RadarParams,
    exec: Exec,
) -> Vec<Vec<RadarDetection>> {
    map_exec(scenes, exec, |(world, speed)| {
        radar_scan(world, *speed, params)
    })
}
