use std::fmt::Write as _;
use std::path::Path;

use crate::error::{config, precondition, Error, Result};
use crate::model::{InitialLaw, LawRepr};

/// Uniform cells on `[-L, L]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid1D {
    half_width: f64,
    n_cells: usize,
}

impl SpatialGrid1D {
    pub fn new(half_width: f64, n_cells: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) || n_cells == 0 {
            return config(format!("need L > 0 and at least one cell, got L = {half_width}, n = {n_cells}"));
        }
        Ok(Self { half_width, n_cells })
    }

    /// Grid on `[-L, L]` whose spacing is at most `dy`.
    pub fn with_spacing(half_width: f64, dy: f64) -> Result<Self> {
        if !(dy > 0.0) {
            return config(format!("cell width must be positive, got {dy}"));
        }
        Self::new(half_width, (2.0 * half_width / dy).ceil().max(1.0) as usize)
    }

    /// Grid wide enough for the centred law up to time `horizon`: the support
    /// of centred `μ0`, plus the largest displacement `2 |b| T` of the
    /// centred drift, plus six diffusion standard deviations. `L` is rounded
    /// up to a whole number of cells of width `dy`.
    pub fn covering(init: &InitialLaw, bound: f64, sigma: f64, horizon: f64, dy: f64) -> Result<Self> {
        if !(dy > 0.0) {
            return config(format!("cell width must be positive, got {dy}"));
        }
        let l = init.support_radius() + 2.0 * bound * horizon + 6.0 * sigma.max(1.0) * horizon.sqrt();
        let half_cells = (l / dy).ceil().max(1.0);
        Self::new(half_cells * dy, 2 * half_cells as usize)
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn dy(&self) -> f64 {
        2.0 * self.half_width / self.n_cells as f64
    }

    #[inline]
    pub fn center(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.dy()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.center(i)).collect()
    }

    /// Same domain, `factor` times more cells.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        Self::new(self.half_width, self.n_cells * factor)
    }
}

/// Cell-average density of a law on the real line.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    pub grid: SpatialGrid1D,
    pub values: Vec<f64>,
    pub time: f64,
}

fn gauss(y: f64, mean: f64, sd: f64) -> f64 {
    let z = (y - mean) / sd;
    (-0.5 * z * z).exp()
}

impl DensityField {
    pub fn new(grid: SpatialGrid1D, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return precondition("density has the wrong number of cells");
        }
        Ok(Self { grid, values, time })
    }

    /// Atoms `y_i` with weights `w_i`, each spread as a Gaussian of width `2Δy`
    /// renormalised on the grid so it carries exactly its weight.
    pub fn from_atoms(grid: SpatialGrid1D, points: &[f64], weights: &[f64]) -> Result<Self> {
        if points.len() != weights.len() || points.is_empty() {
            return precondition("need matching, nonempty atoms and weights");
        }
        let dy = grid.dy();
        let sd = 2.0 * dy;
        let mut values = vec![0.0; grid.n_cells()];
        let mut bump = vec![0.0; grid.n_cells()];
        for (&p, &w) in points.iter().zip(weights) {
            if p.abs() > grid.half_width() {
                return precondition(format!("atom {p} lies outside the grid"));
            }
            let mut mass = 0.0;
            for (i, b) in bump.iter_mut().enumerate() {
                *b = gauss(grid.center(i), p, sd);
                mass += *b * dy;
            }
            for (v, b) in values.iter_mut().zip(&bump) {
                *v += w * b / mass;
            }
        }
        Ok(Self { grid, values, time: 0.0 })
    }

    /// Initial density of `Y_0 = X_0 - μ̄0` for a one-dimensional law.
    pub fn centred_initial(grid: SpatialGrid1D, init: &InitialLaw) -> Result<Self> {
        if init.dim() != 1 {
            return precondition("densities are one-dimensional");
        }
        let mu = init.mean()[0];
        match init.repr() {
            LawRepr::Gaussian { cov, .. } => {
                let sd = cov[0].sqrt().max(2.0 * grid.dy());
                Self::from_atoms_with_width(grid, &[0.0], &[1.0], sd)
            }
            _ => {
                let (p, w) = init.as_atoms().ok_or_else(|| Error::Precondition("law has no atoms".into()))?;
                let centred: Vec<f64> = p.iter().map(|x| x - mu).collect();
                Self::from_atoms(grid, &centred, &w)
            }
        }
    }

    fn from_atoms_with_width(grid: SpatialGrid1D, points: &[f64], weights: &[f64], sd: f64) -> Result<Self> {
        let dy = grid.dy();
        let mut values = vec![0.0; grid.n_cells()];
        for (&p, &w) in points.iter().zip(weights) {
            let bump: Vec<f64> = (0..grid.n_cells()).map(|i| gauss(grid.center(i), p, sd)).collect();
            let mass: f64 = bump.iter().sum::<f64>() * dy;
            for (v, b) in values.iter_mut().zip(&bump) {
                *v += w * b / mass;
            }
        }
        Ok(Self { grid, values, time: 0.0 })
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dy()
    }

    pub fn mean(&self) -> f64 {
        let dy = self.grid.dy();
        self.values.iter().enumerate().map(|(i, v)| v * self.grid.center(i)).sum::<f64>() * dy
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let dy = self.grid.dy();
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| v * (self.grid.center(i) - m).powi(2))
            .sum::<f64>()
            * dy
    }

    /// `∫ f(y) μ(dy)` by the midpoint rule.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let dy = self.grid.dy();
        self.values.iter().enumerate().map(|(i, v)| v * f(self.grid.center(i))).sum::<f64>() * dy
    }

    pub fn l1_distance(&self, other: &DensityField) -> Result<f64> {
        if self.grid != other.grid {
            return precondition("densities live on different grids");
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).sum::<f64>() * self.grid.dy())
    }

    /// Cell averages over blocks of `factor` cells.
    pub fn coarsen(&self, factor: usize) -> Result<DensityField> {
        if factor == 0 || self.grid.n_cells() % factor != 0 {
            return precondition("coarsening factor must divide the cell count");
        }
        let grid = SpatialGrid1D::new(self.grid.half_width(), self.grid.n_cells() / factor)?;
        let values = self.values.chunks(factor).map(|c| c.iter().sum::<f64>() / factor as f64).collect();
        Ok(DensityField {
            grid,
            values,
            time: self.time,
        })
    }

    /// Cumulative mass at the right edge of every cell.
    fn cdf(&self) -> Vec<f64> {
        let dy = self.grid.dy();
        let mut acc = 0.0;
        self.values
            .iter()
            .map(|v| {
                acc += v * dy;
                acc
            })
            .collect()
    }

    /// `W₁` between two densities on the same grid, `∫ |F - G|`.
    pub fn w1(&self, other: &DensityField) -> Result<f64> {
        if self.grid != other.grid {
            return precondition("densities live on different grids");
        }
        let dy = self.grid.dy();
        // The CDFs are piecewise linear; integrate |F - G| exactly per cell.
        let (fa, fb) = (self.cdf(), other.cdf());
        let mut total = 0.0;
        let (mut a0, mut b0) = (0.0f64, 0.0f64);
        for (a1, b1) in fa.into_iter().zip(fb) {
            total += abs_linear_integral(a0 - b0, a1 - b1, dy);
            a0 = a1;
            b0 = b1;
        }
        Ok(total)
    }

    /// `W₁` between the density (uniform within cells) and the empirical law
    /// of `samples`.
    pub fn w1_samples(&self, samples: &[f64]) -> Result<f64> {
        if samples.is_empty() {
            return precondition("need at least one sample");
        }
        let mut s = samples.to_vec();
        s.sort_by(f64::total_cmp);
        let n = s.len() as f64;
        let lo = -self.grid.half_width();
        let dy = self.grid.dy();
        let nc = self.grid.n_cells();
        let mass = self.mass();
        // Breakpoints: cell edges and sample positions, over the union of supports.
        let mut pts: Vec<f64> = (0..=nc).map(|i| lo + i as f64 * dy).collect();
        pts.extend_from_slice(&s);
        pts.sort_by(f64::total_cmp);
        let cdf_edges = self.cdf();
        let f = |y: f64| -> f64 {
            if y <= lo {
                return 0.0;
            }
            let pos = (y - lo) / dy;
            let i = (pos.floor() as usize).min(nc - 1);
            let before = if i == 0 { 0.0 } else { cdf_edges[i - 1] };
            ((before + self.values[i] * (y - lo - i as f64 * dy)).min(cdf_edges[nc - 1])) / mass
        };
        let mut total = 0.0;
        let mut k = 0usize;
        for w in pts.windows(2) {
            let (y0, y1) = (w[0], w[1]);
            while k < s.len() && s[k] <= y0 {
                k += 1;
            }
            if y1 <= y0 {
                continue;
            }
            let g = k as f64 / n;
            total += abs_linear_integral(f(y0) - g, f(y1) - g, y1 - y0);
        }
        Ok(total)
    }

    /// Appends `t,y,density` rows.
    pub fn csv_rows(&self, out: &mut String) {
        for (i, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", self.time, self.grid.center(i), v);
        }
    }
}

/// `∫_0^h |u(s)| ds` for `u` linear from `u0` to `u1`.
fn abs_linear_integral(u0: f64, u1: f64, h: f64) -> f64 {
    if u0 * u1 >= 0.0 {
        0.5 * h * (u0.abs() + u1.abs())
    } else {
        0.5 * h * (u0 * u0 + u1 * u1) / (u0.abs() + u1.abs())
    }
}

/// Writes snapshots as CSV with header `t,y,density`.
pub fn write_density_csv(path: &Path, snapshots: &[DensityField]) -> Result<()> {
    let mut out = String::from("t,y,density\n");
    for s in snapshots {
        s.csv_rows(&mut out);
    }
    std::fs::write(path, out).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}
