use super::grid::TimeGrid;
use crate::error::{config, precondition, Result};

/// Paths sampled at the nodes of a shared grid, laid out `(path, node, component)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBundle {
    grid: TimeGrid,
    dim: usize,
    n_paths: usize,
    values: Vec<f64>,
}

impl PathBundle {
    pub fn zeros(grid: TimeGrid, dim: usize, n_paths: usize) -> Self {
        Self {
            grid,
            dim,
            n_paths,
            values: vec![0.0; n_paths * grid.len() * dim],
        }
    }

    pub fn from_values(grid: TimeGrid, dim: usize, n_paths: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return config("path dimension must be positive");
        }
        if values.len() != n_paths * grid.len() * dim {
            return config(format!(
                "path array has {} entries, expected {} x {} x {}",
                values.len(),
                n_paths,
                grid.len(),
                dim
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return config("path values must be finite");
        }
        Ok(Self {
            grid,
            dim,
            n_paths,
            values,
        })
    }

    /// One path `start + scale * cumulative(increments)`.
    pub fn from_increments(grid: TimeGrid, start: &[f64], increments: &[f64], scale: f64) -> Result<Self> {
        let d = start.len();
        if increments.len() != grid.steps() * d {
            return config("increment array does not match grid");
        }
        let mut values = Vec::with_capacity(grid.len() * d);
        values.extend_from_slice(start);
        for m in 0..grid.steps() {
            for c in 0..d {
                let prev = values[m * d + c];
                values.push(prev + scale * increments[m * d + c]);
            }
        }
        Self::from_values(grid, d, 1, values)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn point(&self, p: usize, m: usize) -> &[f64] {
        let i = (p * self.grid.len() + m) * self.dim;
        &self.values[i..i + self.dim]
    }

    #[inline]
    pub fn point_mut(&mut self, p: usize, m: usize) -> &mut [f64] {
        let i = (p * self.grid.len() + m) * self.dim;
        &mut self.values[i..i + self.dim]
    }

    pub fn path(&self, p: usize) -> &[f64] {
        let n = self.grid.len() * self.dim;
        &self.values[p * n..(p + 1) * n]
    }

    pub fn terminal(&self, p: usize) -> &[f64] {
        self.point(p, self.grid.steps())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `max_m |self[p](t_m) - other[q](t_m)|`.
    pub fn sup_distance(&self, p: usize, other: &PathBundle, q: usize) -> Result<f64> {
        if self.grid != other.grid || self.dim != other.dim {
            return precondition("paths live on different grids or dimensions");
        }
        let a = self.path(p);
        let b = other.path(q);
        Ok(a.chunks(self.dim)
            .zip(b.chunks(self.dim))
            .map(|(x, y)| x.iter().zip(y).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max))
    }

    /// Values of path `p` at the given times, interpolated linearly between nodes.
    pub fn embed(&self, p: usize, times: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let dt = self.grid.dt();
        let mut out = Vec::with_capacity(times.len() * d);
        for &t in times {
            let m = self.grid.node_at_or_before(t);
            if m == self.grid.steps() {
                out.extend_from_slice(self.point(p, m));
                continue;
            }
            let lam = ((t - self.grid.time(m)) / dt).clamp(0.0, 1.0);
            let a = self.point(p, m);
            let b = self.point(p, m + 1);
            out.extend(a.iter().zip(b).map(|(x, y)| x + lam * (y - x)));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_grid;

    #[test]
    fn shape_is_checked() {
        let g = make_grid(1.0, 2).unwrap();
        assert!(PathBundle::from_values(g, 1, 2, vec![0.0; 6]).is_ok());
        assert!(PathBundle::from_values(g, 1, 2, vec![0.0; 5]).is_err());
        assert!(PathBundle::from_values(g, 1, 1, vec![0.0, f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn increments_accumulate() {
        let g = make_grid(1.0, 3).unwrap();
        let p = PathBundle::from_increments(g, &[1.0], &[0.5, -1.0, 2.0], 2.0).unwrap();
        assert_eq!(p.path(0), &[1.0, 2.0, 0.0, 4.0]);
    }

    #[test]
    fn embedding_interpolates() {
        let g = make_grid(1.0, 2).unwrap();
        let p = PathBundle::from_values(g, 1, 1, vec![0.0, 1.0, 3.0]).unwrap();
        assert_eq!(p.embed(0, &[0.0, 0.25, 0.5, 0.75, 1.0]), vec![0.0, 0.5, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn sup_distance_uses_euclidean_norm() {
        let g = make_grid(1.0, 1).unwrap();
        let a = PathBundle::from_values(g, 2, 1, vec![0.0, 0.0, 3.0, 4.0]).unwrap();
        let b = PathBundle::zeros(g, 2, 1);
        assert_eq!(a.sup_distance(0, &b, 0).unwrap(), 5.0);
    }
}
