use crate::error::{precondition, Result};
use crate::flow::{solve_y_field, FlowOptions};
use crate::metrics::Estimate;
use crate::model::{brownian_increments, PathBundle, Purpose, RngStream, SimConfig, TimeGrid};

use super::{log_weight, replicate};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// `Z` as is; its mean is one.
    Raw,
    /// `Z` divided by the sample mean of all weights.
    SelfNormalized,
}

/// One replication of the weighted limit sampler. Paths are laid out `(node, comp)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitSample {
    pub x0: Vec<f64>,
    pub w0: Vec<f64>,
    /// `k` particle paths, one after the other.
    pub particles: Vec<f64>,
    pub initial: Vec<f64>,
    pub log_weight: f64,
}

/// Weighted samples of the limit `(X⁰, X¹, …, X^k)`.
#[derive(Debug, Clone)]
pub struct WeightedEnsemble {
    pub k: usize,
    pub x0: PathBundle,
    pub w0: PathBundle,
    /// Replication-major: path `r * k + i` is particle `i` of replication `r`.
    pub particles: PathBundle,
    /// `(rep, particle, comp)`.
    pub initial: Vec<f64>,
    pub log_weights: Vec<f64>,
    pub mode: Normalization,
}

impl WeightedEnsemble {
    pub fn reps(&self) -> usize {
        self.log_weights.len()
    }

    pub fn weights(&self) -> Vec<f64> {
        let raw: Vec<f64> = self.log_weights.iter().map(|l| l.exp()).collect();
        match self.mode {
            Normalization::Raw => raw,
            Normalization::SelfNormalized => {
                let mean = raw.iter().sum::<f64>() / raw.len() as f64;
                raw.iter().map(|w| w / mean).collect()
            }
        }
    }

    /// Mean of the raw weights, which should be one.
    pub fn raw_weight_mean(&self) -> Estimate {
        let raw: Vec<f64> = self.log_weights.iter().map(|l| l.exp()).collect();
        Estimate::from_samples(&raw)
    }

    /// Weighted mean of a per-replication functional.
    pub fn weighted_mean(&self, values: &[f64]) -> Estimate {
        let w = self.weights();
        let prods: Vec<f64> = w.iter().zip(values).map(|(w, v)| w * v).collect();
        Estimate::from_samples(&prods)
    }
}

/// Candidate common path `μ̄0 + σ⁰B` and the increments of `B`.
pub(crate) fn candidate_path(config: &SimConfig, stream: &RngStream, rep: u64) -> Result<(PathBundle, Vec<f64>)> {
    let d = config.dim();
    let db = brownian_increments(&config.grid, d, &stream.with(rep, 0, Purpose::CommonNoise));
    let path = PathBundle::from_increments(config.grid, config.init.mean(), &db, config.sigma0)?;
    Ok((path, db))
}

/// One replication: `X⁰ = μ̄0 + σ⁰B`, the flow solved along `X⁰`, and the
/// weight turning the law of `B` into the law of `W⁰`.
pub fn limit_replication(config: &SimConfig, k: usize, stream: &RngStream, rep: u64) -> Result<LimitSample> {
    let d = config.dim();
    let grid: TimeGrid = config.grid;
    let dt = grid.dt();
    let steps = grid.steps();
    let initial = config.init.sample(k, &mut stream.with(rep, 0, Purpose::InitialDraws).rng());
    let (bx, db) = candidate_path(config, stream, rep)?;
    let y = solve_y_field(&config.init, &bx, &config.drift, FlowOptions::default())?;
    let mut theta = vec![0.0; steps * d];
    for m in 0..steps {
        for (c, b) in y.mean_drift_on_path(m).iter().enumerate() {
            theta[m * d + c] = b / config.sigma0;
        }
    }
    let lw = log_weight(&theta, &db, d, dt)?;
    let mut w0 = vec![0.0; (steps + 1) * d];
    for m in 0..steps {
        for c in 0..d {
            w0[(m + 1) * d + c] = w0[m * d + c] + db[m * d + c] - theta[m * d + c] * dt;
        }
    }
    let x0 = bx.path(0).to_vec();
    let mut particles = Vec::with_capacity(k * x0.len());
    for i in 0..k {
        let yi = y.test_particle(&initial[i * d..(i + 1) * d])?;
        particles.extend(yi.iter().zip(&x0).map(|(a, b)| a + b));
    }
    Ok(LimitSample {
        x0,
        w0,
        particles,
        initial,
        log_weight: lw,
    })
}

/// Weighted sampler of the case-A limit for atomic `μ0`.
pub fn sample_limit_case_a(config: &SimConfig, k: usize, reps: usize, stream: &RngStream) -> Result<WeightedEnsemble> {
    config.validate_case_a()?;
    if k == 0 || reps == 0 {
        return precondition("need at least one marginal and one replication");
    }
    if config.init.as_atoms().is_none() {
        return precondition("the limit sampler needs an atomic initial law; quadratize first");
    }
    let samples = replicate(reps, |r| limit_replication(config, k, stream, r))?;
    let d = config.dim();
    let grid = config.grid;
    let mut x0 = Vec::with_capacity(reps * grid.len() * d);
    let mut w0 = Vec::with_capacity(reps * grid.len() * d);
    let mut particles = Vec::with_capacity(reps * k * grid.len() * d);
    let mut initial = Vec::with_capacity(reps * k * d);
    let mut log_weights = Vec::with_capacity(reps);
    for s in samples {
        x0.extend(s.x0);
        w0.extend(s.w0);
        particles.extend(s.particles);
        initial.extend(s.initial);
        log_weights.push(s.log_weight);
    }
    Ok(WeightedEnsemble {
        k,
        x0: PathBundle::from_values(grid, d, reps, x0)?,
        w0: PathBundle::from_values(grid, d, reps, w0)?,
        particles: PathBundle::from_values(grid, d, reps * k, particles)?,
        initial,
        log_weights,
        mode: Normalization::Raw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{experiment_key, make_grid, DriftSpec, InitialLaw};

    fn config(drift: DriftSpec) -> SimConfig {
        SimConfig {
            sigma: 0.0,
            sigma0: 1.0,
            n_particles: 1,
            k: 1,
            grid: make_grid(1.0, 32).unwrap(),
            drift,
            init: InitialLaw::two_point(-1.0, 1.0, 0.5).unwrap(),
            seed: 11,
        }
    }

    fn stream() -> RngStream {
        RngStream::new(11, experiment_key("girsanov-test"))
    }

    #[test]
    fn zero_drift_has_unit_weights() {
        let e = sample_limit_case_a(&config(DriftSpec::zero(1)), 2, 50, &stream()).unwrap();
        assert!(e.log_weights.iter().all(|&l| l == 0.0));
        for r in 0..50 {
            assert_eq!(e.x0.path(r), e.w0.path(r));
        }
    }

    #[test]
    fn constant_drift_shifts_the_law() {
        let c = 0.5;
        let e = sample_limit_case_a(&config(DriftSpec::constant(vec![c])), 1, 20000, &stream()).unwrap();
        let terminal: Vec<f64> = (0..e.reps()).map(|r| e.x0.terminal(r)[0]).collect();
        let est = e.weighted_mean(&terminal);
        assert!((est.mean - c).abs() < 4.0 * est.se, "{est:?}");
        let sq: Vec<f64> = terminal.iter().map(|x| (x - c).powi(2)).collect();
        let var = e.weighted_mean(&sq);
        assert!((var.mean - 1.0).abs() < 4.0 * var.se, "{var:?}");
        // W⁰ = B − c t, so X⁰ = W⁰ + c t exactly.
        for r in 0..10 {
            for m in 0..=32 {
                let t = e.x0.grid().time(m);
                assert!((e.x0.point(r, m)[0] - e.w0.point(r, m)[0] - c * t).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tanh_weights_are_a_martingale() {
        let e = sample_limit_case_a(&config(DriftSpec::tanh_gap(1)), 1, 10000, &stream()).unwrap();
        let est = e.raw_weight_mean();
        assert!((est.mean - 1.0).abs() < 4.0 * est.se, "{est:?}");
        let mut sn = e.clone();
        sn.mode = Normalization::SelfNormalized;
        let w = sn.weights();
        assert!((w.iter().sum::<f64>() / w.len() as f64 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn particles_follow_the_flow() {
        // Drift identically zero in x: particles are X⁰ plus their centred start.
        let e = sample_limit_case_a(&config(DriftSpec::constant(vec![0.3])), 2, 5, &stream()).unwrap();
        for r in 0..5 {
            for i in 0..2 {
                let x = e.initial[r * 2 + i];
                for m in 0..=32 {
                    let p = e.particles.point(r * 2 + i, m)[0];
                    assert!((p - e.x0.point(r, m)[0] - x).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn overflow_is_reported() {
        let mut c = config(DriftSpec::constant(vec![40.0]));
        c.grid = make_grid(4.0, 8).unwrap();
        let err = sample_limit_case_a(&c, 1, 4, &stream()).unwrap_err();
        assert!(matches!(err, crate::Error::WeightOverflow(_)));
    }

    #[test]
    fn needs_atoms() {
        let mut c = config(DriftSpec::tanh_gap(1));
        c.init = InitialLaw::gaussian(vec![0.0], vec![1.0]).unwrap();
        assert!(sample_limit_case_a(&c, 1, 4, &stream()).is_err());
    }
}
