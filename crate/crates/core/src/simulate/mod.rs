//! Monte Carlo drivers: particle systems, the weighted limit sampler, the
//! coupled gap estimator, reflection coupling and the counterexample system.

mod counterexample;
mod coupling;
mod gap;
mod girsanov;
mod particles;

pub use counterexample::{
    aggregate_increments, counterexample_drift, phi, reduced_recursion, run_counterexample,
    run_counterexample_seeded, sign_eps, CounterexampleRecord,
};
pub use coupling::{reflection_coupling, CouplingResult};
pub use gap::{gap_replication, prepared_vs_limit_gap, GapEstimate, GapSample};
pub use girsanov::{limit_replication, sample_limit_case_a, LimitSample, Normalization, WeightedEnsemble};
pub use particles::{
    draw_inputs, run_case_b, run_natural, run_prepared, run_with_inputs, ParticleInputs, ParticlePaths,
    ParticleRun, Scheme,
};

use rayon::prelude::*;

use crate::error::Result;

/// Runs `f` for every replication index, in parallel, keeping index order.
pub(crate) fn replicate<T: Send>(reps: usize, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..reps as u64).into_par_iter().map(f).collect()
}

/// Log of the exponential martingale `Σ θ_m ΔB_m - ½ Σ |θ_m|^2 dt` for
/// drifts `θ` (layout `(node, comp)`, at least `steps` nodes) and increments `ΔB`.
pub(crate) fn log_weight(theta: &[f64], db: &[f64], d: usize, dt: f64) -> Result<f64> {
    let steps = db.len() / d;
    let mut lw = 0.0;
    for m in 0..steps {
        for c in 0..d {
            let th = theta[m * d + c];
            lw += th * db[m * d + c] - 0.5 * th * th * dt;
        }
    }
    if !(lw.abs() <= 700.0) {
        return Err(crate::Error::WeightOverflow(lw));
    }
    Ok(lw)
}
