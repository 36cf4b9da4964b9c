//! Deterministic flow maps along a fixed common-noise path.
//!
//! For an atomic initial law with atoms `x_i` and weights `w_i`, the centred
//! flow solves
//!
//! `Y(t, x) = x - c + ∫_0^t [ b(Y(s, x) + bx_s, bx_s) - Σ_i w_i b(Y(s, x_i) + bx_s, bx_s) ] ds`
//!
//! where `c` is the centring constant: the mean of `μ0` for the limit map and
//! the well-prepared system, and the empirical mean for the natural system.
//! Time is discretised with the left-point rule on the grid of `bx`; the
//! resulting explicit recursion is solved by one forward sweep, then checked
//! (and if needed corrected) by Picard sweeps on the whole trajectory.

use std::collections::HashMap;

use crate::error::{precondition, Error, Result};
use crate::model::{DriftSpec, FixedSum, InitialLaw, PathBundle, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Mu0Map,
    NaturalN,
    PreparedN,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AtomWeights {
    Real(Vec<f64>),
    /// Multiplicities of distinct initial points among `total` particles.
    Counts { counts: Vec<u64>, total: u64 },
}

impl AtomWeights {
    fn len(&self) -> usize {
        match self {
            AtomWeights::Real(w) => w.len(),
            AtomWeights::Counts { counts, .. } => counts.len(),
        }
    }

    pub fn weight(&self, i: usize) -> f64 {
        match self {
            AtomWeights::Real(w) => w[i],
            AtomWeights::Counts { counts, total } => counts[i] as f64 / *total as f64,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FlowOptions {
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_sweeps: 200,
        }
    }
}

/// Solved flow: trajectories of every atom on every node of the grid.
#[derive(Debug, Clone)]
pub struct YField {
    grid: TimeGrid,
    dim: usize,
    variant: Variant,
    atoms: Vec<f64>,
    weights: AtomWeights,
    members: Vec<usize>,
    centering: Vec<f64>,
    traj: Vec<f64>,
    mean_drift: Vec<f64>,
    bx: Vec<f64>,
    drift: DriftSpec,
    residual: f64,
    sweeps: usize,
}

/// Weighted mean of `vals` (laid out `(atom, component)`) into `out`.
fn weighted_mean(weights: &AtomWeights, vals: &[f64], d: usize, acc: &mut FixedSum, out: &mut [f64]) -> Result<()> {
    match weights {
        AtomWeights::Real(w) => {
            out.iter_mut().for_each(|o| *o = 0.0);
            for (i, wi) in w.iter().enumerate() {
                for c in 0..d {
                    out[c] += wi * vals[i * d + c];
                }
            }
            Ok(())
        }
        AtomWeights::Counts { counts, total } => {
            acc.clear();
            for (i, &ci) in counts.iter().enumerate() {
                acc.add(&vals[i * d..(i + 1) * d], ci);
            }
            acc.mean_into(*total, out)
                .ok_or_else(|| Error::Numerical("non-finite drift values".into()))
        }
    }
}

struct Problem<'a> {
    grid: TimeGrid,
    d: usize,
    n: usize,
    weights: &'a AtomWeights,
    bx: &'a [f64],
    drift: &'a DriftSpec,
}

impl Problem<'_> {
    /// Drift values at node `m` for the atom positions `y` (layout `(atom, comp)`).
    fn drift_at(&self, m: usize, y: &[f64], vals: &mut [f64], shifted: &mut [f64]) -> Result<()> {
        let d = self.d;
        let z = &self.bx[m * d..(m + 1) * d];
        for i in 0..self.n {
            for c in 0..d {
                shifted[c] = y[i * d + c] + z[c];
            }
            self.drift.eval_checked(&shifted[..d], z, &mut vals[i * d..(i + 1) * d])?;
        }
        Ok(())
    }

    /// Forward sweep; returns trajectories and the averaged drift per node.
    fn forward(&self, y0: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let (d, n, steps) = (self.d, self.n, self.grid.steps());
        let dt = self.grid.dt();
        let mut traj = Vec::with_capacity((steps + 1) * n * d);
        traj.extend_from_slice(y0);
        let mut means = vec![0.0; (steps + 1) * d];
        let mut vals = vec![0.0; n * d];
        let mut shifted = vec![0.0; d];
        let mut acc = FixedSum::new(d);
        let mut next = vec![0.0; n * d];
        for m in 0..=steps {
            let cur = &traj[m * n * d..(m + 1) * n * d];
            self.drift_at(m, cur, &mut vals, &mut shifted)?;
            weighted_mean(self.weights, &vals, d, &mut acc, &mut means[m * d..(m + 1) * d])?;
            if m == steps {
                break;
            }
            let mean = &means[m * d..(m + 1) * d];
            for i in 0..n {
                for c in 0..d {
                    next[i * d + c] = cur[i * d + c] + dt * (vals[i * d + c] - mean[c]);
                }
            }
            traj.extend_from_slice(&next);
        }
        Ok((traj, means))
    }

    /// One Picard sweep: the right-hand side of the fixed-point equation
    /// evaluated on `traj`. Returns the image and the sup-norm residual.
    fn picard(&self, traj: &[f64]) -> Result<(Vec<f64>, Vec<f64>, f64)> {
        let (d, n, steps) = (self.d, self.n, self.grid.steps());
        let dt = self.grid.dt();
        let nd = n * d;
        let mut image = vec![0.0; traj.len()];
        image[..nd].copy_from_slice(&traj[..nd]);
        let mut means = vec![0.0; (steps + 1) * d];
        let mut vals = vec![0.0; nd];
        let mut shifted = vec![0.0; d];
        let mut acc = FixedSum::new(d);
        let mut integral = vec![0.0; nd];
        let mut residual: f64 = 0.0;
        for m in 0..=steps {
            self.drift_at(m, &traj[m * nd..(m + 1) * nd], &mut vals, &mut shifted)?;
            weighted_mean(self.weights, &vals, d, &mut acc, &mut means[m * d..(m + 1) * d])?;
            for j in 0..nd {
                let v = traj[j] + integral[j];
                image[m * nd + j] = v;
                residual = residual.max((v - traj[m * nd + j]).abs());
            }
            if m < steps {
                let mean = &means[m * d..(m + 1) * d];
                for i in 0..n {
                    for c in 0..d {
                        integral[i * d + c] += dt * (vals[i * d + c] - mean[c]);
                    }
                }
            }
        }
        Ok((image, means, residual))
    }
}

#[allow(clippy::too_many_arguments)]
fn solve(
    variant: Variant,
    dim: usize,
    atoms: Vec<f64>,
    weights: AtomWeights,
    members: Vec<usize>,
    centering: Vec<f64>,
    bx: &PathBundle,
    drift: &DriftSpec,
    opts: FlowOptions,
) -> Result<YField> {
    if !drift.is_lipschitz_x() {
        return precondition("flow maps need a drift that is Lipschitz in the state");
    }
    if !(opts.tol > 0.0) {
        return precondition("tolerance must be positive");
    }
    if bx.n_paths() != 1 {
        return precondition("the driving path bundle must hold exactly one path");
    }
    if bx.dim() != dim || drift.dim() != dim {
        return precondition("dimensions of atoms, path and drift differ");
    }
    let n = weights.len();
    if n == 0 {
        return precondition("no atoms");
    }
    let grid = *bx.grid();
    let problem = Problem {
        grid,
        d: dim,
        n,
        weights: &weights,
        bx: bx.values(),
        drift,
    };
    let mut y0 = atoms.clone();
    for i in 0..n {
        for c in 0..dim {
            y0[i * dim + c] -= centering[c];
        }
    }
    let (mut traj, _) = problem.forward(&y0)?;
    let mut sweeps = 0;
    let (residual, means) = loop {
        let (image, image_means, residual) = problem.picard(&traj)?;
        sweeps += 1;
        if !residual.is_finite() {
            return Err(Error::Numerical("flow trajectories became non-finite".into()));
        }
        if residual <= opts.tol {
            break (residual, image_means);
        }
        if sweeps >= opts.max_sweeps {
            return Err(Error::NoConvergence { sweeps, residual });
        }
        traj = image;
    };
    Ok(YField {
        grid,
        dim,
        variant,
        atoms,
        weights,
        members,
        centering,
        traj,
        mean_drift: means,
        bx: bx.values().to_vec(),
        drift: drift.clone(),
        residual,
        sweeps,
    })
}

/// Groups equal points; returns distinct points, multiplicities and the group
/// of every input point. Particles that start together stay together under a
/// common-noise-only dynamics, so solving per group is exact.
pub(crate) fn group_points(points: &[f64], d: usize) -> (Vec<f64>, Vec<u64>, Vec<usize>) {
    let mut atoms = Vec::new();
    let mut counts: Vec<u64> = Vec::new();
    let mut members = Vec::with_capacity(points.len() / d);
    if d == 1 {
        let mut index: HashMap<u64, usize> = HashMap::new();
        for &p in points {
            let g = *index.entry((p + 0.0).to_bits()).or_insert_with(|| {
                atoms.push(p);
                counts.push(0);
                counts.len() - 1
            });
            counts[g] += 1;
            members.push(g);
        }
        return (atoms, counts, members);
    }
    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    for p in points.chunks(d) {
        let key: Vec<u64> = p.iter().map(|v| (v + 0.0).to_bits()).collect();
        let g = *index.entry(key).or_insert_with(|| {
            atoms.extend_from_slice(p);
            counts.push(0);
            counts.len() - 1
        });
        counts[g] += 1;
        members.push(g);
    }
    (atoms, counts, members)
}

fn empirical_mean(points: &[f64], d: usize) -> Result<Vec<f64>> {
    let mut acc = FixedSum::new(d);
    for p in points.chunks(d) {
        acc.add(p, 1);
    }
    let mut out = vec![0.0; d];
    acc.mean_into((points.len() / d) as u64, &mut out)
        .ok_or_else(|| Error::Config("initial points must be finite".into()))?;
    Ok(out)
}

/// Limit flow map for an atomic law `μ0`.
pub fn solve_y_field(init: &InitialLaw, bx: &PathBundle, drift: &DriftSpec, opts: FlowOptions) -> Result<YField> {
    let (atoms, weights) = init
        .as_atoms()
        .ok_or_else(|| Error::Precondition("flow maps need an atomic initial law; quadratize first".into()))?;
    solve(
        Variant::Mu0Map,
        init.dim(),
        atoms,
        AtomWeights::Real(weights),
        Vec::new(),
        init.mean().to_vec(),
        bx,
        drift,
        opts,
    )
}

/// Natural discrete system: centred by the empirical mean of `x0`.
pub fn solve_y_natural(x0: &[f64], dim: usize, bx: &PathBundle, drift: &DriftSpec, opts: FlowOptions) -> Result<YField> {
    if dim == 0 || x0.is_empty() || x0.len() % dim != 0 {
        return precondition("initial points do not form whole vectors");
    }
    let centering = empirical_mean(x0, dim)?;
    let (atoms, counts, members) = group_points(x0, dim);
    let total = (x0.len() / dim) as u64;
    solve(
        Variant::NaturalN,
        dim,
        atoms,
        AtomWeights::Counts { counts, total },
        members,
        centering,
        bx,
        drift,
        opts,
    )
}

/// Well-prepared discrete system: centred by the mean `mu_bar` of `μ0`.
pub fn solve_y_prepared(
    x0: &[f64],
    dim: usize,
    mu_bar: &[f64],
    bx: &PathBundle,
    drift: &DriftSpec,
    opts: FlowOptions,
) -> Result<YField> {
    if dim == 0 || x0.is_empty() || x0.len() % dim != 0 {
        return precondition("initial points do not form whole vectors");
    }
    if mu_bar.len() != dim {
        return precondition("mean has the wrong dimension");
    }
    let (atoms, counts, members) = group_points(x0, dim);
    let total = (x0.len() / dim) as u64;
    solve(
        Variant::PreparedN,
        dim,
        atoms,
        AtomWeights::Counts { counts, total },
        members,
        mu_bar.to_vec(),
        bx,
        drift,
        opts,
    )
}

impl YField {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn n_atoms(&self) -> usize {
        self.weights.len()
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &AtomWeights {
        &self.weights
    }

    /// Number of particles (natural/prepared) or atoms (limit map).
    pub fn n_particles(&self) -> usize {
        if self.members.is_empty() {
            self.n_atoms()
        } else {
            self.members.len()
        }
    }

    /// Atom holding particle `p`.
    pub fn group_of(&self, p: usize) -> usize {
        if self.members.is_empty() {
            p
        } else {
            self.members[p]
        }
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    pub fn centering(&self) -> &[f64] {
        &self.centering
    }

    /// `Y(t_m, x_i)`.
    #[inline]
    pub fn value(&self, m: usize, i: usize) -> &[f64] {
        let j = (m * self.n_atoms() + i) * self.dim;
        &self.traj[j..j + self.dim]
    }

    /// Trajectory of particle `p` (its group's trajectory), laid out `(node, comp)`.
    pub fn particle_path(&self, p: usize) -> Vec<f64> {
        self.atom_path(self.group_of(p))
    }

    pub fn atom_path(&self, i: usize) -> Vec<f64> {
        (0..self.grid.len()).flat_map(|m| self.value(m, i).to_vec()).collect()
    }

    /// Index of an atom bitwise equal to `x`, if any.
    pub fn find_atom(&self, x: &[f64]) -> Option<usize> {
        let d = self.dim;
        (0..self.n_atoms()).find(|&i| self.atoms[i * d..(i + 1) * d] == *x)
    }

    /// Averaged drift at node `m` evaluated at `z = bx(t_m)`, as computed by the solver.
    pub fn mean_drift_on_path(&self, m: usize) -> &[f64] {
        &self.mean_drift[m * self.dim..(m + 1) * self.dim]
    }

    fn averaged(&self, m: usize, z: &[f64], bx: &PathBundle) -> Result<Vec<f64>> {
        if m > self.grid.steps() {
            return precondition(format!("node {m} beyond solved range 0..={}", self.grid.steps()));
        }
        if bx.values() != self.bx.as_slice() {
            return precondition("flow was solved along a different path");
        }
        if z.len() != self.dim {
            return precondition("evaluation point has the wrong dimension");
        }
        let d = self.dim;
        let n = self.n_atoms();
        let mut vals = vec![0.0; n * d];
        let mut shifted = vec![0.0; d];
        for i in 0..n {
            let y = self.value(m, i);
            for c in 0..d {
                shifted[c] = y[c] + z[c];
            }
            self.drift.eval_checked(&shifted, z, &mut vals[i * d..(i + 1) * d])?;
        }
        let mut out = vec![0.0; d];
        weighted_mean(&self.weights, &vals, d, &mut FixedSum::new(d), &mut out)?;
        Ok(out)
    }

    /// `Σ_i w_i b(Y(t_m, x_i) + z, z)` for the limit map.
    pub fn eval_bbar(&self, m: usize, z: &[f64], bx: &PathBundle) -> Result<Vec<f64>> {
        if self.variant != Variant::Mu0Map {
            return precondition("eval_bbar needs a limit flow map");
        }
        self.averaged(m, z, bx)
    }

    /// `(1/N) Σ_j b(Y^j(t_m) + z, z)` for the well-prepared system.
    pub fn eval_bn(&self, m: usize, z: &[f64], bx: &PathBundle) -> Result<Vec<f64>> {
        if self.variant != Variant::PreparedN {
            return precondition("eval_bn needs a well-prepared flow");
        }
        self.averaged(m, z, bx)
    }

    /// Trajectory of `Y(·, x)` for an arbitrary starting point, driven by the
    /// averaged drift of the solved atoms.
    pub fn test_particle(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return precondition("test point has the wrong dimension");
        }
        if let Some(i) = self.find_atom(x) {
            return Ok(self.atom_path(i));
        }
        let d = self.dim;
        let dt = self.grid.dt();
        let mut y: Vec<f64> = x.iter().zip(&self.centering).map(|(a, c)| a - c).collect();
        let mut out = Vec::with_capacity(self.grid.len() * d);
        out.extend_from_slice(&y);
        let mut shifted = vec![0.0; d];
        let mut b = vec![0.0; d];
        for m in 0..self.grid.steps() {
            let z = &self.bx[m * d..(m + 1) * d];
            for c in 0..d {
                shifted[c] = y[c] + z[c];
            }
            self.drift.eval_checked(&shifted, z, &mut b)?;
            let mean = self.mean_drift_on_path(m);
            for c in 0..d {
                y[c] += dt * (b[c] - mean[c]);
            }
            out.extend_from_slice(&y);
        }
        Ok(out)
    }

    /// Weighted atom average of the trajectories at node `m`.
    pub fn atom_average(&self, m: usize) -> Vec<f64> {
        let d = self.dim;
        let mut out = vec![0.0; d];
        for i in 0..self.n_atoms() {
            let w = self.weights.weight(i);
            for (o, v) in out.iter_mut().zip(self.value(m, i)) {
                *o += w * v;
            }
        }
        let _ = d;
        out
    }
}
