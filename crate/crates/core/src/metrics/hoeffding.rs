use crate::error::{precondition, Result};

use super::Estimate;

/// One replication: `N` vectors in `R^d` laid out `(draw, component)`, and
/// the conditional mean they should be centred at.
#[derive(Debug, Clone, PartialEq)]
pub struct HoeffdingSample {
    pub values: Vec<f64>,
    pub center: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoeffdingVerdict {
    pub q: u32,
    pub n: usize,
    pub estimate: Estimate,
    pub bound: f64,
    pub pass: bool,
    /// `bound + 4 SE - estimate`; nonnegative exactly when the check passes.
    pub margin: f64,
}

/// `q! (4 d B^2 / N)^q`.
pub fn hoeffding_bound(q: u32, d: usize, bound: f64, n: usize) -> f64 {
    let fact: f64 = (1..=q).map(|i| i as f64).product();
    fact * (4.0 * d as f64 * bound * bound / n as f64).powi(q as i32)
}

/// Empirical `E|mean - center|^{2q}` against the Hoeffding-type bound. Passes
/// when the estimate does not exceed the bound by more than four standard errors.
pub fn hoeffding_check(samples: &[HoeffdingSample], d: usize, bound: f64, q: u32) -> Result<HoeffdingVerdict> {
    if !(q == 1 || q == 2) {
        return precondition("q must be 1 or 2");
    }
    if samples.is_empty() || d == 0 {
        return precondition("no replications");
    }
    let n = samples[0].values.len() / d;
    if n == 0 {
        return precondition("empty replication");
    }
    let mut stats = Vec::with_capacity(samples.len());
    for s in samples {
        if s.values.len() != n * d || s.center.len() != d {
            return precondition("replications differ in size or dimension");
        }
        if s.values.iter().any(|v| !(v.abs() <= bound)) {
            return precondition(format!("a value exceeds the bound {bound}"));
        }
        let mut norm2 = 0.0;
        for c in 0..d {
            let m = s.values.iter().skip(c).step_by(d).sum::<f64>() / n as f64;
            norm2 += (m - s.center[c]).powi(2);
        }
        stats.push(norm2.powi(q as i32));
    }
    let estimate = Estimate::from_samples(&stats);
    let b = hoeffding_bound(q, d, bound, n);
    let margin = b + 4.0 * estimate.se - estimate.mean;
    Ok(HoeffdingVerdict {
        q,
        n,
        estimate,
        bound: b,
        pass: margin >= 0.0,
        margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rademacher(n: usize, reps: usize, seed: u64) -> Vec<HoeffdingSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..reps)
            .map(|_| HoeffdingSample {
                values: (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect(),
                center: vec![0.0],
            })
            .collect()
    }

    #[test]
    fn rademacher_second_moment() {
        let v = hoeffding_check(&rademacher(100, 4000, 1), 1, 1.0, 1).unwrap();
        assert!(v.pass);
        assert!((v.bound - 0.04).abs() < 1e-15);
        assert!((v.estimate.mean - 0.01).abs() < 4.0 * v.estimate.se);
    }

    #[test]
    fn rademacher_fourth_moment() {
        let v = hoeffding_check(&rademacher(100, 4000, 2), 1, 1.0, 2).unwrap();
        assert!(v.pass);
        assert!((v.bound - 32.0 / 1e4).abs() < 1e-15);
        // Fourth moment of the mean of N signs: 3/N^2 - 2/N^3.
        let exact = 3.0 / 1e4 - 2.0 / 1e6;
        assert!((v.estimate.mean - exact).abs() < 4.0 * v.estimate.se);
    }

    #[test]
    fn constant_values_have_zero_moment() {
        let s = vec![HoeffdingSample { values: vec![0.5; 10], center: vec![0.5] }; 5];
        let v = hoeffding_check(&s, 1, 1.0, 2).unwrap();
        assert_eq!(v.estimate.mean, 0.0);
        assert!(v.pass);
    }

    #[test]
    fn miscentred_values_fail() {
        let s = vec![HoeffdingSample { values: vec![1.0; 100], center: vec![0.0] }; 50];
        assert!(!hoeffding_check(&s, 1, 1.0, 1).unwrap().pass);
    }

    #[test]
    fn out_of_bound_rejected() {
        let s = vec![HoeffdingSample { values: vec![2.0; 3], center: vec![0.0] }];
        assert!(hoeffding_check(&s, 1, 1.0, 1).is_err());
        assert!(hoeffding_check(&s, 1, 5.0, 3).is_err());
    }
}
