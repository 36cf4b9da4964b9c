//! Empirical distances, coupling bounds, moment checks and rate fits.

mod bl;
mod hoeffding;
mod rate;
mod sampling;
mod wasserstein;

pub use bl::{bl_upper_coupled, bl_upper_weighted, capped_distance};
pub use hoeffding::{hoeffding_bound, hoeffding_check, HoeffdingSample, HoeffdingVerdict};
pub use rate::{fit_loglog, fit_rate, RateFit, RatePoint};
pub use sampling::sampling_tv_bound;
pub use wasserstein::{w1_1d, w1_1d_weighted, w1_sliced, w1_sliced_weighted, SlicedW1};

use serde::{Deserialize, Serialize};

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { mean: f64::NAN, se: f64::NAN, n };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let se = if n > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, se, n }
    }
}

/// Knobs shared by the distance estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricParams {
    /// Cap `M` of the bounded-Lipschitz class.
    pub m_bl: f64,
    pub slices: usize,
    pub direction_seed: u64,
    /// Landmark times as fractions of the horizon.
    pub landmarks: Vec<f64>,
}

impl Default for MetricParams {
    fn default() -> Self {
        Self {
            m_bl: 1.0,
            slices: 64,
            direction_seed: 0,
            landmarks: vec![0.0, 0.25, 0.5, 0.75, 1.0],
        }
    }
}

impl MetricParams {
    pub fn validate(&self) -> crate::Result<()> {
        if !(self.m_bl > 0.0) {
            return crate::error::config("bounded-Lipschitz cap must be positive");
        }
        if self.slices == 0 {
            return crate::error::config("need at least one slice direction");
        }
        if self.landmarks.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return crate::error::config("landmarks are fractions of the horizon in [0, 1]");
        }
        Ok(())
    }
}
