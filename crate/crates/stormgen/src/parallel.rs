//! Multi-threaded ensemble generation. Output is identical to
//! [`stormgen_core::generate_ensemble`] for any worker count.

use rayon::prelude::*;
use stormgen_core::ensemble::check_feasible;
use stormgen_core::{generate_member, EnsembleSpec, ScenarioGenerator, ScenarioSet};

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

pub fn generate_ensemble_parallel<G: ScenarioGenerator + Sync + ?Sized>(
    spec: &EnsembleSpec,
    generator: &G,
    workers: usize,
) -> stormgen_core::Result<ScenarioSet> {
    check_feasible(spec, generator)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool");
    let scenarios = pool.install(|| {
        (0..spec.n_scenarios)
            .into_par_iter()
            .map(|i| generate_member(generator, spec, i))
            .collect::<stormgen_core::Result<Vec<_>>>()
    })?;
    Ok(ScenarioSet {
        spec: spec.clone(),
        scenarios,
        calibration: None,
    })
}
