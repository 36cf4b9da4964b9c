use cmvsim::model::{experiment_key, make_grid, RngStream};
use cmvsim::simulate::reflection_coupling;
use statrs::distribution::{ContinuousCDF, Normal};

const REPS: usize = 100_000;

fn stream() -> RngStream {
    RngStream::new(21, experiment_key("coupling-closed-forms"))
}

/// The mirrored pair meets when the driving motion reaches half the gap, so
/// by the reflection principle `P[τ = T] = 2Φ(h / (2√T)) - 1`.
fn p_unmerged(h: f64, horizon: f64) -> f64 {
    2.0 * Normal::standard().cdf(h / (2.0 * horizon.sqrt())) - 1.0
}

fn unmerged_fraction(h: f64, steps: usize) -> (f64, f64) {
    let res = reflection_coupling(h, &make_grid(1.0, steps).unwrap(), REPS, &stream(), false).unwrap();
    assert!(res.iter().all(|r| r.tau <= 1.0 && r.tau >= 0.0));
    assert!(res.iter().all(|r| r.merged || r.tau == 1.0));
    let p = res.iter().filter(|r| !r.merged).count() as f64 / REPS as f64;
    (p, (p * (1.0 - p) / REPS as f64).sqrt())
}

#[test]
fn closed_form_probabilities() {
    for (h, expect) in [(2.0, 0.6827), (1.0, 0.3829)] {
        let exact = p_unmerged(h, 1.0);
        assert!((exact - expect).abs() < 1e-4);
        let (p, se) = unmerged_fraction(h, 64);
        assert!((p - exact).abs() <= 4.0 * se, "h = {h}: {p} vs {exact} (se {se})");
    }
}

#[test]
fn tail_below_bound_at_every_node() {
    let h = 0.5;
    let grid = make_grid(1.0, 128).unwrap();
    let res = reflection_coupling(h, &grid, REPS, &stream(), false).unwrap();
    for m in 1..=128 {
        let t = grid.time(m);
        let p = res.iter().filter(|r| r.tau >= t).count() as f64 / REPS as f64;
        let se = (p * (1.0 - p) / REPS as f64).sqrt();
        let bound = (2.0 * h / (2.0 * std::f64::consts::PI * t).sqrt()).min(1.0);
        assert!(p <= bound + 4.0 * se, "t = {t}: {p} > {bound}");
    }
}

/// `E[τ] = ∫_0^T P[τ > t] dt` with the closed-form tail, by Simpson's rule.
fn mean_tau(h: f64) -> f64 {
    let n = 2000;
    let dt = 1.0 / n as f64;
    let f = |t: f64| if t == 0.0 { 1.0 } else { p_unmerged(h, t) };
    let mut s = f(0.0) + f(1.0);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * dt);
    }
    s * dt / 3.0
}

#[test]
fn mean_merge_time_grows_at_most_linearly() {
    let grid = make_grid(1.0, 128).unwrap();
    let mut ratios = Vec::new();
    for h in [0.1, 0.2, 0.5, 1.0] {
        let taus: Vec<f64> = reflection_coupling(h, &grid, 20_000, &stream(), false).unwrap().iter().map(|r| r.tau).collect();
        let mean = taus.iter().sum::<f64>() / taus.len() as f64;
        let sd = (taus.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (taus.len() - 1) as f64).sqrt();
        // The grid reports τ at step midpoints, so allow half a step of bias.
        let exact = mean_tau(h);
        assert!((mean - exact).abs() <= 4.0 * sd / (taus.len() as f64).sqrt() + 0.5 * grid.dt(), "h = {h}: {mean} vs {exact}");
        ratios.push(mean / h);
    }
    assert!(ratios.windows(2).all(|w| w[1] <= w[0] * 1.05), "{ratios:?}");
}
