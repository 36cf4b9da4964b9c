use crate::error::{precondition, Result};
use crate::flow::{solve_y_field, solve_y_prepared, FlowOptions, YField};
use crate::metrics::Estimate;
use crate::model::{Purpose, RngStream, SimConfig};

use super::girsanov::candidate_path;
use super::{log_weight, replicate};

/// Per-replication ingredients of the gap estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapSample {
    pub z_n: f64,
    pub z_inf: f64,
    /// `Σ_{i<k} sup_t |Y^{i,N} - Y(·, x^i)|`.
    pub path_term: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapEstimate {
    pub n: usize,
    pub k: usize,
    pub m_bl: f64,
    pub samples: Vec<GapSample>,
    pub estimate: Estimate,
}

fn theta(y: &YField, sigma0: f64) -> Vec<f64> {
    let steps = y.grid().steps();
    let d = y.dim();
    let mut th = vec![0.0; steps * d];
    for m in 0..steps {
        for (c, b) in y.mean_drift_on_path(m).iter().enumerate() {
            th[m * d + c] = b / sigma0;
        }
    }
    th
}

fn sup_gap(a: &[f64], b: &[f64], d: usize) -> f64 {
    a.chunks(d)
        .zip(b.chunks(d))
        .map(|(p, q)| p.iter().zip(q).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

/// One replication of the coupled estimator: both systems are driven by the
/// same initial points and the same candidate path.
pub fn gap_replication(config: &SimConfig, k: usize, m_bl: f64, stream: &RngStream, rep: u64) -> Result<GapSample> {
    let d = config.dim();
    let dt = config.grid.dt();
    let n = config.n_particles;
    let x0vec = config.init.sample(n, &mut stream.with(rep, 0, Purpose::InitialDraws).rng());
    let (bx, db) = candidate_path(config, stream, rep)?;
    let opts = FlowOptions::default();
    let yn = solve_y_prepared(&x0vec, d, config.init.mean(), &bx, &config.drift, opts)?;
    let yinf = solve_y_field(&config.init, &bx, &config.drift, opts)?;
    let z_n = log_weight(&theta(&yn, config.sigma0), &db, d, dt)?.exp();
    let z_inf = log_weight(&theta(&yinf, config.sigma0), &db, d, dt)?.exp();
    let mut path_term = 0.0;
    for i in 0..k {
        let a = yn.particle_path(i);
        let b = yinf.test_particle(&x0vec[i * d..(i + 1) * d])?;
        path_term += sup_gap(&a, &b, d);
    }
    let value = 0.5 * m_bl * (z_n - z_inf).abs() + z_inf * path_term.min(m_bl);
    Ok(GapSample {
        z_n,
        z_inf,
        path_term,
        value,
    })
}

/// Upper bound on the bounded-Lipschitz distance between the `k`-marginals of
/// the well-prepared system and of the limit.
pub fn prepared_vs_limit_gap(
    config: &SimConfig,
    k: usize,
    m_bl: f64,
    reps: usize,
    stream: &RngStream,
) -> Result<GapEstimate> {
    config.validate_case_a()?;
    if k == 0 || k > config.n_particles {
        return precondition(format!("need 1 <= k <= N, got k = {k}, N = {}", config.n_particles));
    }
    if !(m_bl > 0.0) || reps == 0 {
        return precondition("need a positive cap and at least one replication");
    }
    if config.init.as_atoms().is_none() {
        return precondition("the gap estimator needs an atomic initial law; quadratize first");
    }
    let samples = replicate(reps, |r| gap_replication(config, k, m_bl, stream, r))?;
    let values: Vec<f64> = samples.iter().map(|s| s.value).collect();
    Ok(GapEstimate {
        n: config.n_particles,
        k,
        m_bl,
        estimate: Estimate::from_samples(&values),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{experiment_key, make_grid, DriftSpec, InitialLaw};

    fn config(drift: DriftSpec, init: InitialLaw, n: usize) -> SimConfig {
        SimConfig {
            sigma: 0.0,
            sigma0: 1.0,
            n_particles: n,
            k: 1,
            grid: make_grid(1.0, 64).unwrap(),
            drift,
            init,
            seed: 3,
        }
    }

    fn stream() -> RngStream {
        RngStream::new(3, experiment_key("gap-test"))
    }

    #[test]
    fn zero_drift_gives_zero() {
        let c = config(DriftSpec::zero(1), InitialLaw::two_point(-1.0, 1.0, 0.5).unwrap(), 16);
        let g = prepared_vs_limit_gap(&c, 2, 1.0, 20, &stream()).unwrap();
        assert_eq!(g.estimate.mean, 0.0);
    }

    #[test]
    fn single_atom_gives_zero() {
        let c = config(DriftSpec::tanh_gap(1), InitialLaw::dirac(vec![0.7]).unwrap(), 1);
        let g = prepared_vs_limit_gap(&c, 1, 1.0, 20, &stream()).unwrap();
        assert!(g.estimate.mean < 1e-9, "{:?}", g.estimate);
    }

    #[test]
    fn gap_shrinks_with_n() {
        let law = InitialLaw::two_point(-1.0, 1.0, 0.5).unwrap();
        let small = prepared_vs_limit_gap(&config(DriftSpec::tanh_gap(1), law.clone(), 16), 1, 1.0, 400, &stream()).unwrap();
        let large = prepared_vs_limit_gap(&config(DriftSpec::tanh_gap(1), law, 1024), 1, 1.0, 400, &stream()).unwrap();
        assert!(large.estimate.mean < 0.5 * small.estimate.mean, "{small:?} {large:?}");
    }

    #[test]
    fn rejects_bad_k() {
        let c = config(DriftSpec::tanh_gap(1), InitialLaw::two_point(-1.0, 1.0, 0.5).unwrap(), 4);
        assert!(prepared_vs_limit_gap(&c, 5, 1.0, 2, &stream()).is_err());
        assert!(prepared_vs_limit_gap(&c, 4, 1.0, 2, &stream()).is_ok());
    }
}
