use crate::error::{precondition, Result};
use crate::model::PathBundle;

use super::Estimate;

/// `min(M, Σ_i sup_t |a_i - b_i|)` for one coupled pair of path tuples.
pub fn capped_distance(a: &PathBundle, b: &PathBundle, m: f64) -> Result<f64> {
    if a.n_paths() != b.n_paths() {
        return precondition(format!(
            "tuple arity mismatch: {} vs {} paths",
            a.n_paths(),
            b.n_paths()
        ));
    }
    let mut s = 0.0;
    for p in 0..a.n_paths() {
        s += a.sup_distance(p, b, p)?;
    }
    Ok(s.min(m))
}

/// Coupling upper bound on the bounded-Lipschitz distance with cap `m`:
/// the Monte Carlo mean of `min(M, Σ_i sup_t |a_i - b_i|)` over aligned pairs.
pub fn bl_upper_coupled(pairs: &[(PathBundle, PathBundle)], m: f64) -> Result<Estimate> {
    if !(m > 0.0) {
        return precondition("cap must be positive");
    }
    let vals = pairs
        .iter()
        .map(|(a, b)| capped_distance(a, b, m))
        .collect::<Result<Vec<_>>>()?;
    Ok(Estimate::from_samples(&vals))
}

/// As [`bl_upper_coupled`] with a per-pair weight multiplying each term.
pub fn bl_upper_weighted(pairs: &[(PathBundle, PathBundle)], weights: &[f64], m: f64) -> Result<Estimate> {
    if pairs.len() != weights.len() {
        return precondition("one weight per pair");
    }
    if !(m > 0.0) {
        return precondition("cap must be positive");
    }
    let vals = pairs
        .iter()
        .zip(weights)
        .map(|((a, b), w)| capped_distance(a, b, m).map(|v| w * v))
        .collect::<Result<Vec<_>>>()?;
    Ok(Estimate::from_samples(&vals))
}
