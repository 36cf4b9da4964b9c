//! Two-atom system whose interaction goes through the conditional variance
//! `β = (X¹ - X²)² / 4` instead of the conditional mean. With a drift that
//! jumps at `β = 1`, the gap `D = X¹ - X² - 2` obeys `D' = -2 sign(D)` from
//! `D = 0`, which has no solution: the Euler scheme chatters with an
//! amplitude proportional to the step.

use crate::error::{precondition, Result};
use crate::model::{brownian_increments, sign, Purpose, RngStream, TimeGrid};

/// Lipschitz cut-off: `-1` below `-1/2`, `+1` above `1/2`, linear between.
pub fn phi(y: f64) -> f64 {
    (2.0 * y).clamp(-1.0, 1.0)
}

/// `sign` for `eps = 0`; otherwise the ramp `clamp(1 + u/eps, -1, 1)`, which
/// keeps the value `+1` at the origin.
pub fn sign_eps(u: f64, eps: f64) -> f64 {
    if eps == 0.0 {
        sign(u)
    } else {
        (1.0 + u / eps).clamp(-1.0, 1.0)
    }
}

/// `b(y1, y2) = -sign_eps(y2 - 1) φ(y1)`.
pub fn counterexample_drift(y1: f64, y2: f64, eps: f64) -> f64 {
    -sign_eps(y2 - 1.0, eps) * phi(y1)
}

/// Euler iterates of `D' = -2 sign(D)`, `D_0 = 0`.
pub fn reduced_recursion(dt: f64, steps: usize) -> Vec<f64> {
    let mut d = Vec::with_capacity(steps + 1);
    d.push(0.0);
    for m in 0..steps {
        let cur = d[m];
        d.push(cur - 2.0 * sign(cur) * dt);
    }
    d
}

/// Sums consecutive blocks of `factor` increments.
pub fn aggregate_increments(fine: &[f64], factor: usize) -> Result<Vec<f64>> {
    if factor == 0 || fine.len() % factor != 0 {
        return precondition(format!("{} increments do not split into blocks of {factor}", fine.len()));
    }
    Ok(fine.chunks(factor).map(|c| c.iter().sum()).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleRecord {
    pub eps: f64,
    pub dt: f64,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    /// `X¹ - X² - 2` at every node.
    pub d: Vec<f64>,
    /// First node after the start with `D ≤ 0`.
    pub first_hit: Option<usize>,
    /// `max |D_m|` over nodes from the first hit on; zero if never hit.
    pub amplitude: f64,
}

fn simulate(eps: f64, grid: &TimeGrid, dw: &[f64]) -> Result<CounterexampleRecord> {
    if !(eps >= 0.0) {
        return precondition(format!("smoothing must be nonnegative, got {eps}"));
    }
    let dt = grid.dt();
    let steps = grid.steps();
    let (mut a, mut b) = (1.0, -1.0);
    let mut x1 = vec![a];
    let mut x2 = vec![b];
    for inc in dw.iter().take(steps) {
        let beta = (a - b) * (a - b) / 4.0;
        let (ba, bb) = (counterexample_drift(a, beta, eps), counterexample_drift(b, beta, eps));
        a += ba * dt + inc;
        b += bb * dt + inc;
        x1.push(a);
        x2.push(b);
    }
    let d: Vec<f64> = x1.iter().zip(&x2).map(|(p, q)| p - q - 2.0).collect();
    let first_hit = (1..d.len()).find(|&m| d[m] <= 0.0);
    let amplitude = first_hit.map_or(0.0, |h| d[h..].iter().fold(0.0, |acc: f64, v| acc.max(v.abs())));
    Ok(CounterexampleRecord {
        eps,
        dt,
        x1,
        x2,
        d,
        first_hit,
        amplitude,
    })
}

/// Euler run of the two-atom system driven by its own common noise.
pub fn run_counterexample(eps: f64, grid: &TimeGrid, stream: &RngStream) -> Result<CounterexampleRecord> {
    let dw = brownian_increments(grid, 1, &stream.with(0, 0, Purpose::CommonNoise));
    simulate(eps, grid, &dw)
}

/// Euler run whose noise is the aggregate of a noise path drawn on a finer
/// grid with `finest_steps` steps, so runs at different steps share one path.
pub fn run_counterexample_seeded(
    eps: f64,
    grid: &TimeGrid,
    finest_steps: usize,
    stream: &RngStream,
) -> Result<CounterexampleRecord> {
    if finest_steps < grid.steps() || finest_steps % grid.steps() != 0 {
        return precondition("finest grid must refine the run grid");
    }
    let fine = TimeGrid::new(grid.horizon(), finest_steps)?;
    let dw = brownian_increments(&fine, 1, &stream.with(0, 0, Purpose::CommonNoise));
    let coarse = aggregate_increments(&dw, finest_steps / grid.steps())?;
    simulate(eps, grid, &coarse)
}
