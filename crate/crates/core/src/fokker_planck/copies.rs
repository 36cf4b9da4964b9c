use crate::error::{precondition, Result};
use crate::metrics::{hoeffding_bound, Estimate, HoeffdingSample};
use crate::model::{brownian_increments, PathBundle, Purpose, RngStream, SimConfig};
use crate::simulate::replicate;

use super::solver::{coevolve_replication, CoevolveOptions, CoevolvedPath};

/// Centred copy `j` of replication `rep`: `Y_0 ~ μ0 - μ̄0` and
/// `dY = (b(Y + X⁰, X⁰) - b̄) dt + σ dW^j`. Copy `j` always uses the same
/// streams, so batches of different sizes share their first copies.
fn copy_path(config: &SimConfig, path: &CoevolvedPath, stream: &RngStream, rep: u64, j: u64) -> Result<Vec<f64>> {
    let grid = config.grid;
    let dt = grid.dt();
    let mu = config.init.mean()[0];
    let start = config.init.sample(1, &mut stream.with(rep, j, Purpose::InitialDraws).rng())[0];
    let dw = brownian_increments(&grid, 1, &stream.with(rep, j, Purpose::IndividualNoise));
    let mut y = start - mu;
    let mut out = Vec::with_capacity(grid.len());
    out.push(y);
    for m in 0..grid.steps() {
        let z = path.x0[m];
        let b = config.drift.eval1_checked(y + z, z)?;
        y += (b - path.bbar[m]) * dt + config.sigma * dw[m];
        out.push(y);
    }
    Ok(out)
}

fn check(config: &SimConfig, path: &CoevolvedPath) -> Result<()> {
    config.validate_case_b()?;
    if config.dim() != 1 {
        return precondition("conditional copies are one-dimensional");
    }
    if path.x0.len() != config.grid.len() || path.bbar.len() != config.grid.len() {
        return precondition("co-evolved path does not match the time grid");
    }
    Ok(())
}

/// `k` conditionally independent copies `X^i = Y^i + X⁰` along one co-evolved path.
pub fn sample_conditional_copies(
    config: &SimConfig,
    path: &CoevolvedPath,
    k: usize,
    stream: &RngStream,
    rep: u64,
) -> Result<PathBundle> {
    check(config, path)?;
    let mut values = Vec::with_capacity(k * config.grid.len());
    for j in 0..k {
        let y = copy_path(config, path, stream, rep, j as u64)?;
        values.extend(y.iter().zip(&path.x0).map(|(a, b)| a + b));
    }
    PathBundle::from_values(config.grid, 1, k, values)
}

/// Drift values `b(X^j_m, X⁰_m)` of `n` copies at node `m`, centred at `b̄_m`.
pub fn conditional_drift_sample(
    config: &SimConfig,
    path: &CoevolvedPath,
    n: usize,
    node: usize,
    stream: &RngStream,
    rep: u64,
) -> Result<HoeffdingSample> {
    check(config, path)?;
    if node > config.grid.steps() {
        return precondition("node beyond the horizon");
    }
    let z = path.x0[node];
    let mut values = Vec::with_capacity(n);
    for j in 0..n {
        let y = copy_path(config, path, stream, rep, j as u64)?;
        values.push(config.drift.eval1_checked(y[node] + z, z)?);
    }
    Ok(HoeffdingSample {
        values,
        center: vec![path.bbar[node]],
    })
}

/// Per-replication values of `∫_0^T |Δ^N_s|² ds` for one `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaStats {
    pub n: usize,
    pub values: Vec<f64>,
    /// Estimate of `E[∫|Δ^N|²]`.
    pub q1: Estimate,
    /// Estimate of `E[(∫|Δ^N|²)²]`.
    pub q2: Estimate,
    /// `q! (4 d |b|² T / N)^q` for `q = 1, 2`.
    pub bound_q1: f64,
    pub bound_q2: f64,
}

/// `∫|Δ^N|²` for every `N` in `n_list`, from one co-evolved path and the
/// first `max N` copies along it (left-point rule).
fn delta_replication(
    config: &SimConfig,
    opts: &CoevolveOptions,
    n_list: &[usize],
    stream: &RngStream,
    rep: u64,
) -> Result<Vec<f64>> {
    let path = coevolve_replication(config, opts, stream, rep)?;
    let steps = config.grid.steps();
    let dt = config.grid.dt();
    let n_max = *n_list.iter().max().unwrap_or(&0);
    // Running sums of drift values per node, checkpointed at every requested N.
    let mut sums = vec![0.0; steps];
    let mut out = vec![0.0; n_list.len()];
    let mut order: Vec<usize> = (0..n_list.len()).collect();
    order.sort_by_key(|&i| n_list[i]);
    let mut next = 0;
    for j in 0..n_max {
        let y = copy_path(config, &path, stream, rep, j as u64)?;
        for m in 0..steps {
            let z = path.x0[m];
            sums[m] += config.drift.eval1_checked(y[m] + z, z)?;
        }
        while next < order.len() && n_list[order[next]] == j + 1 {
            let n = (j + 1) as f64;
            out[order[next]] = (0..steps).map(|m| (sums[m] / n - path.bbar[m]).powi(2) * dt).sum();
            next += 1;
        }
    }
    Ok(out)
}

pub fn delta_moment_estimate(
    config: &SimConfig,
    n_list: &[usize],
    reps: usize,
    stream: &RngStream,
    opts: &CoevolveOptions,
) -> Result<Vec<DeltaStats>> {
    config.validate_case_b()?;
    if config.dim() != 1 {
        return precondition("the density solver is one-dimensional");
    }
    if n_list.is_empty() || n_list.contains(&0) || reps == 0 {
        return precondition("need positive particle counts and at least one replication");
    }
    let per_rep = replicate(reps, |r| delta_replication(config, opts, n_list, stream, r))?;
    let t = config.grid.horizon();
    let b = config.drift.bound();
    Ok(n_list
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let values: Vec<f64> = per_rep.iter().map(|v| v[i]).collect();
            let squares: Vec<f64> = values.iter().map(|v| v * v).collect();
            DeltaStats {
                n,
                q1: Estimate::from_samples(&values),
                q2: Estimate::from_samples(&squares),
                bound_q1: hoeffding_bound(1, 1, b, n) * t,
                bound_q2: hoeffding_bound(2, 1, b, n) * t * t,
                values,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fokker_planck::coevolve_limit_b;
    use crate::model::{experiment_key, make_grid, DriftSpec, InitialLaw};

    fn config(drift: DriftSpec) -> SimConfig {
        SimConfig {
            sigma: 1.0,
            sigma0: 1.0,
            n_particles: 1,
            k: 1,
            grid: make_grid(1.0, 64).unwrap(),
            drift,
            init: InitialLaw::two_point(-1.0, 2.0, 2.0 / 3.0).unwrap(),
            seed: 2,
        }
    }

    fn stream() -> RngStream {
        RngStream::new(2, experiment_key("copies-test"))
    }

    fn opts() -> CoevolveOptions {
        CoevolveOptions { dy: 0.1, ..Default::default() }
    }

    #[test]
    fn zero_drift_copies() {
        let c = config(DriftSpec::zero(1));
        let s = stream();
        let p = coevolve_limit_b(&c, 1, &s, &opts()).unwrap().remove(0);
        let copies = sample_conditional_copies(&c, &p, 3, &s, 0).unwrap();
        let w0 = brownian_increments(&c.grid, 1, &s.with(0, 0, Purpose::CommonNoise));
        for j in 0..3 {
            let x = c.init.sample(1, &mut s.with(0, j, Purpose::InitialDraws).rng())[0];
            let w = brownian_increments(&c.grid, 1, &s.with(0, j, Purpose::IndividualNoise));
            let (mut a, mut b) = (0.0, 0.0);
            for m in 0..=64 {
                let expect = x + a + b;
                assert!((copies.point(j as usize, m)[0] - expect).abs() < 1e-12);
                if m < 64 {
                    a += w[m];
                    b += w0[m];
                }
            }
        }
    }

    #[test]
    fn copies_are_centred() {
        let c = config(DriftSpec::sign_gap(1));
        let s = stream();
        let p = coevolve_limit_b(&c, 1, &s, &opts()).unwrap().remove(0);
        let n = 10_000;
        let copies = sample_conditional_copies(&c, &p, n, &s, 0).unwrap();
        let mean_y: f64 = (0..n).map(|j| copies.terminal(j)[0] - p.x0[64]).sum::<f64>() / n as f64;
        assert!(mean_y.abs() < 4.0 * 1.0 / 100.0, "{mean_y}");
    }

    #[test]
    fn constant_drift_has_no_gap() {
        let c = config(DriftSpec::constant(vec![0.5]));
        let stats = delta_moment_estimate(&c, &[5, 10], 4, &stream(), &opts()).unwrap();
        for s in stats {
            assert!(s.values.iter().all(|&v| v < 1e-24));
        }
    }

    #[test]
    fn nested_counts_share_copies() {
        let c = config(DriftSpec::sign_gap(1));
        let a = delta_moment_estimate(&c, &[10, 40], 3, &stream(), &opts()).unwrap();
        let b = delta_moment_estimate(&c, &[40], 3, &stream(), &opts()).unwrap();
        assert_eq!(a[1].values, b[0].values);
        assert!((a[0].bound_q1 - 0.4).abs() < 1e-15);
    }
}
