//! Thread-pool execution of Monte Carlo streams.

use mcvd_core::montecarlo::{SimResult, Simulation, Tally};
use rayon::prelude::*;

use crate::error::{AppError, AppResult};

/// Runs every stream of `sim` on `threads` workers (0 picks the rayon
/// default). Tallies are integers, so the result does not depend on the
/// thread count or scheduling.
pub fn simulate_parallel(sim: &Simulation, threads: usize) -> AppResult<SimResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| AppError::Usage(format!("cannot start {threads} worker thread(s): {e}")))?;
    let tallies: Vec<Tally> = pool.install(|| {
        (0..sim.stream_count())
            .into_par_iter()
            .map(|i| sim.run_stream(i))
            .collect()
    });
    let mut iter = tallies.into_iter();
    let mut total = iter.next().expect("at least one stream");
    for t in iter {
        total.merge(&t);
    }
    Ok(sim.finish(&total))
}
