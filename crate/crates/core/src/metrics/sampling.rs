use crate::error::{precondition, Result};

/// `(1 - N!/(N^k (N-k)!), k(k-1)/(2N))`: total-variation distance between
/// sampling `k` of `N` labels with and without replacement, and its bound.
pub fn sampling_tv_bound(n: u64, k: u64) -> Result<(f64, f64)> {
    if k == 0 || n == 0 {
        return precondition("need 1 <= k <= N");
    }
    if k > n {
        return precondition(format!("k = {k} exceeds N = {n}"));
    }
    let nf = n as f64;
    let bound = k as f64 * (k as f64 - 1.0) / (2.0 * nf);
    let exact = match k {
        1 => 0.0,
        2 => 1.0 / nf,
        _ => {
            // log of Π_{j<k} (1 - j/N); once it is below -40 the product is
            // zero to double precision.
            let mut log_p = 0.0;
            for j in 1..k {
                log_p += (-(j as f64) / nf).ln_1p();
                if log_p < -40.0 {
                    break;
                }
            }
            -log_p.exp_m1()
        }
    };
    Ok((exact, bound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn examples() {
        assert_eq!(sampling_tv_bound(10, 1).unwrap(), (0.0, 0.0));
        let (e, b) = sampling_tv_bound(2, 2).unwrap();
        assert_eq!((e, b), (0.5, 0.5));
        let (e, b) = sampling_tv_bound(10, 3).unwrap();
        assert!((e - 0.28).abs() < 1e-15);
        assert!((b - 0.3).abs() < 1e-15);
        assert!(sampling_tv_bound(3, 4).is_err());
    }

    #[test]
    fn matches_direct_product() {
        for (n, k) in [(7u64, 4u64), (50, 10), (1000, 30)] {
            let p: f64 = (0..k).map(|j| (n - j) as f64 / n as f64).product();
            let (e, _) = sampling_tv_bound(n, k).unwrap();
            assert!((e - (1.0 - p)).abs() < 1e-13);
        }
    }

    #[test]
    fn bound_holds_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..2000 {
            let n = rng.random_range(1..=1_000_000u64);
            let k = rng.random_range(1..=n);
            let (e, b) = sampling_tv_bound(n, k).unwrap();
            assert!((0.0..=1.0).contains(&e));
            assert!(e <= b, "N={n} k={k}: {e} > {b}");
        }
    }
}
