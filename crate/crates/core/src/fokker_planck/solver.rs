use crate::error::{precondition, Error, Result};
use crate::model::{brownian_increments, DriftSpec, Purpose, RngStream, SimConfig};
use crate::simulate::replicate;

use super::density::{DensityField, SpatialGrid1D};

/// Largest explicit step that keeps the scheme positive:
/// `1 / (σ²/Δy² + 2|b|/Δy)`.
pub fn admissible_dt(grid: &SpatialGrid1D, sigma: f64, bound: f64) -> f64 {
    let dy = grid.dy();
    1.0 / (sigma * sigma / (dy * dy) + 2.0 * bound / dy)
}

/// Reusable buffers for repeated steps on one grid.
pub(crate) struct Stepper {
    velocity: Vec<f64>,
    flux: Vec<f64>,
}

impl Stepper {
    pub fn new(n: usize) -> Self {
        Self {
            velocity: vec![0.0; n],
            flux: vec![0.0; n + 1],
        }
    }

    /// `∫ b(y + x0, x0) m(y) dy` by the midpoint rule; leaves the drift
    /// values in the velocity buffer.
    pub fn mean_drift(&mut self, grid: &SpatialGrid1D, m: &[f64], x0: f64, drift: &DriftSpec) -> Result<f64> {
        let dy = grid.dy();
        let mut acc = 0.0;
        for (i, (v, mi)) in self.velocity.iter_mut().zip(m).enumerate() {
            *v = drift.eval1_checked(grid.center(i) + x0, x0)?;
            acc += *v * mi;
        }
        Ok(acc * dy)
    }

    /// One explicit step; returns the mean drift used.
    pub fn step(
        &mut self,
        grid: &SpatialGrid1D,
        m: &mut [f64],
        x0: f64,
        drift: &DriftSpec,
        sigma: f64,
        dt: f64,
    ) -> Result<f64> {
        let limit = admissible_dt(grid, sigma, drift.bound());
        if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
            return precondition(format!("time step {dt} violates the stability bound; admissible dt <= {limit}"));
        }
        let dy = grid.dy();
        let n = m.len();
        let bbar = self.mean_drift(grid, m, x0, drift)?;
        self.velocity.iter_mut().for_each(|v| *v -= bbar);
        let diff = 0.5 * sigma * sigma / dy;
        self.flux[0] = 0.0;
        self.flux[n] = 0.0;
        for i in 0..n - 1 {
            let (a, b) = (self.velocity[i], self.velocity[i + 1]);
            self.flux[i + 1] = a.max(0.0) * m[i] + b.min(0.0) * m[i + 1] - diff * (m[i + 1] - m[i]);
        }
        let r = dt / dy;
        let mut lowest = f64::INFINITY;
        for i in 0..n {
            m[i] -= r * (self.flux[i + 1] - self.flux[i]);
            lowest = lowest.min(m[i]);
        }
        if lowest < -1e-12 {
            return Err(Error::Numerical(format!("density went negative ({lowest:e})")));
        }
        Ok(bbar)
    }
}

fn check_mass(m: &[f64], dy: f64, reference: f64) -> Result<()> {
    let mass = m.iter().sum::<f64>() * dy;
    if !((mass - reference).abs() <= 1e-6) {
        return Err(Error::Numerical(format!("mass drifted from {reference} to {mass}")));
    }
    Ok(())
}

/// Advances `∂_t μ = (σ²/2) ∂_yy μ - ∂_y(μ (b(y + x0, x0) - ⟨b⟩_μ))` by one
/// explicit finite-volume step: upwind drift flux, centred diffusion and zero
/// flux through the boundary.
pub fn fp_step(density: &DensityField, x0: f64, drift: &DriftSpec, sigma: f64, dt: f64) -> Result<DensityField> {
    if drift.dim() != 1 {
        return precondition("the density solver is one-dimensional");
    }
    let mut out = density.clone();
    let reference = density.mass();
    Stepper::new(density.values.len()).step(&density.grid, &mut out.values, x0, drift, sigma, dt)?;
    check_mass(&out.values, density.grid.dy(), reference)?;
    out.time += dt;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoevolveOptions {
    /// Target cell width; the domain follows the covering rule.
    pub dy: f64,
    /// Grid nodes at which densities are recorded.
    pub snapshot_nodes: Vec<usize>,
    /// Safety factor applied to the stability bound.
    pub cfl: f64,
}

impl Default for CoevolveOptions {
    fn default() -> Self {
        Self {
            dy: 0.05,
            snapshot_nodes: Vec::new(),
            cfl: 0.9,
        }
    }
}

/// One realisation of the common process and of the conditional law of `Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoevolvedPath {
    /// `X⁰` at every node.
    pub x0: Vec<f64>,
    /// `b̄(t_m, X⁰_m) = ∫ b(y + X⁰_m, X⁰_m) μ_m(dy)` at every node.
    pub bbar: Vec<f64>,
    pub snapshots: Vec<DensityField>,
    /// Solver steps per grid step.
    pub substeps: usize,
}

/// Spatial grid used by [`coevolve_limit_b`] for this configuration.
pub fn coevolve_grid(config: &SimConfig, opts: &CoevolveOptions) -> Result<SpatialGrid1D> {
    SpatialGrid1D::covering(&config.init, config.drift.bound(), config.sigma, config.grid.horizon(), opts.dy)
}

/// Co-evolution along given common-noise increments.
pub fn coevolve_with_noise(config: &SimConfig, opts: &CoevolveOptions, dw0: &[f64]) -> Result<CoevolvedPath> {
    let grid = coevolve_grid(config, opts)?;
    let steps = config.grid.steps();
    if dw0.len() != steps {
        return precondition("noise does not match the time grid");
    }
    if opts.snapshot_nodes.iter().any(|&m| m > steps) {
        return precondition("snapshot node beyond the horizon");
    }
    let dt = config.grid.dt();
    let limit = opts.cfl * admissible_dt(&grid, config.sigma, config.drift.bound());
    let substeps = (dt / limit).ceil().max(1.0) as usize;
    let h = dt / substeps as f64;
    let mut density = DensityField::centred_initial(grid, &config.init)?;
    let reference = density.mass();
    let mut stepper = Stepper::new(grid.n_cells());
    let mut x0 = vec![config.init.mean()[0]];
    let mut bbar = Vec::with_capacity(steps + 1);
    let mut snapshots = Vec::new();
    for m in 0..=steps {
        let z = x0[m];
        bbar.push(stepper.mean_drift(&grid, &density.values, z, &config.drift)?);
        if opts.snapshot_nodes.contains(&m) {
            density.time = config.grid.time(m);
            snapshots.push(density.clone());
        }
        if m == steps {
            break;
        }
        for _ in 0..substeps {
            stepper.step(&grid, &mut density.values, z, &config.drift, config.sigma, h)?;
        }
        check_mass(&density.values, grid.dy(), reference)?;
        x0.push(z + bbar[m] * dt + config.sigma0 * dw0[m]);
    }
    Ok(CoevolvedPath {
        x0,
        bbar,
        snapshots,
        substeps,
    })
}

/// Replication `rep` of the case-B limit: the pair `(X⁰, μ)` stepped together,
/// `X⁰` by Euler with drift `b̄` and `μ` by the density solver with `X⁰` frozen
/// over each grid step.
pub fn coevolve_replication(config: &SimConfig, opts: &CoevolveOptions, stream: &RngStream, rep: u64) -> Result<CoevolvedPath> {
    let dw0 = brownian_increments(&config.grid, 1, &stream.with(rep, 0, Purpose::CommonNoise));
    coevolve_with_noise(config, opts, &dw0)
}

pub fn coevolve_limit_b(
    config: &SimConfig,
    reps: usize,
    stream: &RngStream,
    opts: &CoevolveOptions,
) -> Result<Vec<CoevolvedPath>> {
    config.validate_case_b()?;
    if config.dim() != 1 {
        return precondition("the density solver is one-dimensional");
    }
    replicate(reps, |r| coevolve_replication(config, opts, stream, r))
}
