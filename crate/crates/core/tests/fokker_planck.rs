use cmvsim::fokker_planck::{
    admissible_dt, coevolve_with_noise, fp_step, mollify_drift, sample_conditional_copies, CoevolveOptions,
    DensityField, SpatialGrid1D,
};
use cmvsim::model::{brownian_increments, experiment_key, make_grid, DriftSpec, InitialLaw, RngStream, SimConfig};
use proptest::prelude::*;

fn case_b(drift: DriftSpec, steps: usize) -> SimConfig {
    SimConfig {
        sigma: 1.0,
        sigma0: 1.0,
        n_particles: 1,
        k: 1,
        grid: make_grid(1.0, steps).unwrap(),
        drift,
        init: InitialLaw::two_point(-1.0, 2.0, 2.0 / 3.0).unwrap(),
        seed: 8,
    }
}

/// Terminal density along a prescribed common path, `X⁰` frozen over each step.
fn along_path(drift: &DriftSpec, grid: SpatialGrid1D, x0: &[f64]) -> DensityField {
    let steps = x0.len() - 1;
    let dt = 1.0 / steps as f64;
    let sub = (dt / (0.9 * admissible_dt(&grid, 1.0, 1.0))).ceil() as usize;
    let mut d = DensityField::from_atoms(grid, &[-1.0, 1.0], &[0.5, 0.5]).unwrap();
    for &z in &x0[..steps] {
        for _ in 0..sub {
            d = fp_step(&d, z, drift, 1.0, dt / sub as f64).unwrap();
        }
    }
    d
}

#[test]
fn mollified_drifts_approach_the_sign_drift() {
    let steps = 32;
    let time = make_grid(1.0, steps).unwrap();
    let dw = brownian_increments(&time, 1, &RngStream::new(8, experiment_key("mollified")));
    let mut x0 = vec![0.0];
    for w in &dw {
        x0.push(x0.last().unwrap() + w);
    }
    let grid = SpatialGrid1D::with_spacing(8.0, 0.025).unwrap();
    let sign = DriftSpec::sign_gap(1);
    let reference = along_path(&sign, grid, &x0);
    let gaps: Vec<f64> = [4, 16, 64]
        .iter()
        .map(|&n| along_path(&mollify_drift(&sign, n).unwrap(), grid, &x0).w1(&reference).unwrap())
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}

fn cdf_at(d: &DensityField, y: f64) -> f64 {
    let lo = -d.grid.half_width();
    let dy = d.grid.dy();
    let mut f = 0.0;
    for (i, v) in d.values.iter().enumerate() {
        let left = lo + i as f64 * dy;
        f += v * (y - left).clamp(0.0, dy);
    }
    f
}

/// `∫ |F - G|` for densities on different grids, by the trapezoid rule on a
/// lattice finer than both.
fn w1_between_grids(a: &DensityField, b: &DensityField) -> f64 {
    let l = a.grid.half_width().max(b.grid.half_width());
    let h = a.grid.dy().min(b.grid.dy()) / 4.0;
    let n = (2.0 * l / h).round() as usize;
    let g: Vec<f64> = (0..=n).map(|i| (cdf_at(a, -l + i as f64 * h) - cdf_at(b, -l + i as f64 * h)).abs()).collect();
    g.windows(2).map(|w| 0.5 * (w[0] + w[1]) * h).sum()
}

/// Copies sampled along a co-evolved path against the density at `T`. The
/// allowance is the grid error (change under halving `dy`) plus four times
/// the mean empirical `W₁` scale `∫ sqrt(F (1 - F)) / sqrt(n)`.
#[test]
fn copies_match_the_density() {
    let steps = 256;
    let k = 10_000;
    let cfg = case_b(DriftSpec::tanh_gap(1), steps);
    let dw0 = brownian_increments(&cfg.grid, 1, &RngStream::new(8, experiment_key("copies-vs-density")));
    let solve = |dy| {
        let opts = CoevolveOptions { dy, snapshot_nodes: vec![steps], ..Default::default() };
        coevolve_with_noise(&cfg, &opts, &dw0).unwrap()
    };
    let coarse = solve(0.05);
    let fine = solve(0.025);
    let (dc, df) = (&coarse.snapshots[0], &fine.snapshots[0]);
    let grid_error = w1_between_grids(dc, df);
    let copies = sample_conditional_copies(&cfg, &coarse, k, &RngStream::new(8, experiment_key("copies")), 0).unwrap();
    let y: Vec<f64> = (0..k).map(|j| copies.terminal(j)[0] - coarse.x0[steps]).collect();
    let mean = y.iter().sum::<f64>() / k as f64;
    assert!(mean.abs() <= 4.0 * 1.0 / (k as f64).sqrt() * 2.0, "copies not centred: {mean}");
    let spread: f64 = {
        let dy = dc.grid.dy();
        let mut f = 0.0;
        let mut s = 0.0;
        for v in &dc.values {
            f += v * dy;
            s += (f * (1.0 - f)).max(0.0).sqrt() * dy;
        }
        s / (k as f64).sqrt()
    };
    let w1 = dc.w1_samples(&y).unwrap();
    assert!(w1 <= grid_error + 4.0 * spread, "w1 {w1}, grid {grid_error}, mc {spread}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn coevolution_keeps_mass_centre_and_bounded_mean_drift(seed in 0u64..1000, which in 0usize..3) {
        let drift = [DriftSpec::sign_gap(1), DriftSpec::tanh_gap(1), DriftSpec::tanh_of_mean(1)][which].clone();
        let cfg = case_b(drift, 16);
        let dw0 = brownian_increments(&cfg.grid, 1, &RngStream::new(seed, experiment_key("fp-props")));
        let opts = CoevolveOptions { dy: 0.1, snapshot_nodes: (0..=16).collect(), ..Default::default() };
        let path = coevolve_with_noise(&cfg, &opts, &dw0).unwrap();
        for b in &path.bbar {
            prop_assert!(b.abs() <= cfg.drift.bound());
        }
        for s in &path.snapshots {
            prop_assert!((s.mass() - 1.0).abs() <= 1e-8);
            prop_assert!(s.mean().abs() <= 1e-6);
            prop_assert!(s.values.iter().all(|&v| v >= -1e-12));
        }
    }
}
