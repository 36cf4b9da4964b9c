use super::drift::DriftSpec;
use super::grid::TimeGrid;
use super::law::InitialLaw;
use crate::error::{config, Result};

/// Parameters of one particle-system experiment.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub sigma: f64,
    pub sigma0: f64,
    pub n_particles: usize,
    pub k: usize,
    pub grid: TimeGrid,
    pub drift: DriftSpec,
    pub init: InitialLaw,
    pub seed: u64,
}

impl SimConfig {
    pub fn dim(&self) -> usize {
        self.init.dim()
    }

    /// Checks the invariants shared by both regimes.
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma0 > 0.0 && self.sigma0.is_finite()) {
            return config(format!("sigma0 must be positive, got {}", self.sigma0));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return config(format!("sigma must be nonnegative, got {}", self.sigma));
        }
        if self.sigma == 0.0 && !self.drift.is_lipschitz_x() {
            return config("sigma = 0 requires a drift that is Lipschitz in the state");
        }
        if self.n_particles == 0 {
            return config("particle count must be positive");
        }
        if self.k == 0 || self.k > self.n_particles {
            return config(format!(
                "marginal count k = {} must lie in [1, N = {}]",
                self.k, self.n_particles
            ));
        }
        if self.drift.dim() != self.init.dim() {
            return config("drift and initial law dimensions differ");
        }
        Ok(())
    }

    /// Regime without individual noise.
    pub fn validate_case_a(&self) -> Result<()> {
        self.validate()?;
        if self.sigma != 0.0 {
            return config("this scheme needs sigma = 0");
        }
        Ok(())
    }

    /// Regime with individual noise.
    pub fn validate_case_b(&self) -> Result<()> {
        self.validate()?;
        if self.sigma <= 0.0 {
            return config("this scheme needs sigma > 0");
        }
        Ok(())
    }
}
