use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

/// Uniform partition of `[0, T]` into `steps` intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

pub fn make_grid(horizon: f64, steps: usize) -> Result<TimeGrid> {
    TimeGrid::new(horizon, steps)
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return config(format!("horizon must be positive and finite, got {horizon}"));
        }
        if steps == 0 {
            return config("time grid needs at least one step");
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of nodes, `steps + 1`.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn time(&self, m: usize) -> f64 {
        if m == self.steps {
            self.horizon
        } else {
            m as f64 * self.dt()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.steps).map(|m| self.time(m)).collect()
    }

    /// Grid with `factor` times as many steps over the same horizon.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        Self::new(self.horizon, self.steps * factor)
    }

    /// Index of the last node with time `<= t`.
    pub fn node_at_or_before(&self, t: f64) -> usize {
        if t >= self.horizon {
            return self.steps;
        }
        if t <= 0.0 {
            return 0;
        }
        let m = (t / self.dt()).floor() as usize;
        m.min(self.steps)
    }
}
