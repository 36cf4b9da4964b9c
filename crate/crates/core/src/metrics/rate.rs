use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{precondition, Result};
use crate::model::RngStream;

/// Replication-level errors observed at one value of `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePoint {
    pub n: f64,
    pub samples: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub log_n: Vec<f64>,
    pub log_err: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub ci: (f64, f64),
}

/// Least-squares line through `(x, y)`; returns `(slope, intercept)`.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Log-log slope of the mean error against `N`, with a 95% percentile
/// bootstrap interval obtained by resampling replications within each `N`.
pub fn fit_rate(points: &[RatePoint], boot_reps: usize, stream: &RngStream) -> Result<RateFit> {
    if points.len() < 3 {
        return precondition("a rate fit needs at least three points");
    }
    if points.iter().any(|p| p.samples.is_empty() || !(p.n > 0.0)) {
        return precondition("every point needs a positive N and at least one sample");
    }
    let errs: Vec<f64> = points.iter().map(|p| mean(&p.samples)).collect();
    if errs.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
        return precondition("errors must be positive and finite");
    }
    let log_n: Vec<f64> = points.iter().map(|p| p.n.ln()).collect();
    let log_err: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let (slope, intercept) = fit_loglog(&log_n, &log_err);
    let mut slopes = Vec::with_capacity(boot_reps);
    let mut rng = stream.rng();
    let mut ys = vec![0.0; points.len()];
    for _ in 0..boot_reps {
        let mut ok = true;
        for (y, p) in ys.iter_mut().zip(points) {
            let k = p.samples.len();
            let m = (0..k).map(|_| p.samples[rng.random_range(0..k)]).sum::<f64>() / k as f64;
            if !(m > 0.0) {
                ok = false;
            }
            *y = m.ln();
        }
        if ok {
            slopes.push(fit_loglog(&log_n, &ys).0);
        }
    }
    let ci = if slopes.is_empty() {
        (slope, slope)
    } else {
        slopes.sort_by(f64::total_cmp);
        let lo = quantile(&slopes, 0.025).min(slope);
        let hi = quantile(&slopes, 0.975).max(slope);
        (lo, hi)
    };
    Ok(RateFit {
        log_n,
        log_err,
        slope,
        intercept,
        ci,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Purpose;
    use rand_distr::{Distribution, StandardNormal};

    fn stream(i: u64) -> RngStream {
        RngStream::new(1, 2).with(i, 0, Purpose::Bootstrap)
    }

    #[test]
    fn exact_power_law() {
        let pts: Vec<RatePoint> = [64.0, 256.0, 1024.0, 4096.0]
            .iter()
            .map(|n: &f64| RatePoint { n: *n, samples: vec![3.0 * n.powf(-0.5)] })
            .collect();
        let f = fit_rate(&pts, 10, &stream(0)).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12);
        assert!(f.ci.0 <= f.slope && f.slope <= f.ci.1);
    }

    #[test]
    fn constant_errors() {
        let pts: Vec<RatePoint> = [10.0, 20.0, 40.0]
            .iter()
            .map(|n| RatePoint { n: *n, samples: vec![0.2, 0.2] })
            .collect();
        assert!(fit_rate(&pts, 10, &stream(0)).unwrap().slope.abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        let two = vec![RatePoint { n: 1.0, samples: vec![1.0] }; 2];
        assert!(fit_rate(&two, 1, &stream(0)).is_err());
        let neg = vec![
            RatePoint { n: 1.0, samples: vec![1.0] },
            RatePoint { n: 2.0, samples: vec![-1.0] },
            RatePoint { n: 4.0, samples: vec![1.0] },
        ];
        assert!(fit_rate(&neg, 1, &stream(0)).is_err());
    }

    #[test]
    fn bootstrap_coverage_on_synthetic_errors() {
        let ns = [64.0, 128.0, 256.0, 512.0, 1024.0];
        let mut covered = 0;
        let trials = 100;
        for t in 0..trials {
            let mut rng = stream(1000 + t).rng();
            let pts: Vec<RatePoint> = ns
                .iter()
                .map(|n: &f64| RatePoint {
                    n: *n,
                    samples: (0..50)
                        .map(|_| {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            2.0 * n.powf(-0.5) * (1.0 + 0.05 * z)
                        })
                        .collect(),
                })
                .collect();
            let f = fit_rate(&pts, 400, &stream(t)).unwrap();
            assert!((-0.6..=-0.4).contains(&f.slope), "slope {}", f.slope);
            if f.ci.0 <= -0.5 && -0.5 <= f.ci.1 {
                covered += 1;
            }
        }
        // Nominal 95%; allow binomial slack over 100 trials.
        assert!(covered >= 88, "coverage {covered}/100");
    }
}
