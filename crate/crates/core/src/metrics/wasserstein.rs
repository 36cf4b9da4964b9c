use rand_distr::{Distribution, StandardNormal};

use crate::error::{precondition, Result};
use crate::model::{Purpose, RngStream};

use super::{Estimate, MetricParams};

fn sorted(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.iter().any(|x| !x.is_finite()) {
        return precondition("samples must be finite");
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Exact W1 between two empirical laws on the line.
///
/// Equal sizes use the sorted pairing; otherwise the integral of the absolute
/// difference of the two empirical distribution functions, which is the same
/// quantity for uniform weights of any sizes.
pub fn w1_1d(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return precondition("empty sample");
    }
    let sa = sorted(a)?;
    let sb = sorted(b)?;
    if sa.len() == sb.len() {
        return Ok(sa.iter().zip(&sb).map(|(x, y)| (x - y).abs()).sum::<f64>() / sa.len() as f64);
    }
    let wa = vec![1.0 / sa.len() as f64; sa.len()];
    let wb = vec![1.0 / sb.len() as f64; sb.len()];
    Ok(cdf_gap(&sa, &wa, &sb, &wb))
}

/// `∫ |F_a - F_b|` for sorted atoms with weights summing to one.
fn cdf_gap(a: &[f64], wa: &[f64], b: &[f64], wb: &[f64]) -> f64 {
    let (mut i, mut j) = (0, 0);
    let (mut fa, mut fb) = (0.0f64, 0.0f64);
    let mut last = f64::NAN;
    let mut total = 0.0;
    while i < a.len() || j < b.len() {
        let take_a = j >= b.len() || (i < a.len() && a[i] <= b[j]);
        let x = if take_a { a[i] } else { b[j] };
        if last.is_finite() {
            total += (fa - fb).abs() * (x - last);
        }
        last = x;
        if take_a {
            fa += wa[i];
            i += 1;
        } else {
            fb += wb[j];
            j += 1;
        }
    }
    total
}

/// W1 between an unweighted sample and a weighted one (weights need not be
/// normalised).
pub fn w1_1d_weighted(a: &[f64], wa: &[f64], b: &[f64], wb: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return precondition("empty sample");
    }
    if a.len() != wa.len() || b.len() != wb.len() {
        return precondition("weights do not match samples");
    }
    let prep = |x: &[f64], w: &[f64]| -> Result<(Vec<f64>, Vec<f64>)> {
        if w.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return precondition("weights must be finite and nonnegative");
        }
        let s: f64 = w.iter().sum();
        if !(s > 0.0) {
            return precondition("weights sum to zero");
        }
        if x.iter().any(|v| !v.is_finite()) {
            return precondition("samples must be finite");
        }
        let mut idx: Vec<usize> = (0..x.len()).collect();
        idx.sort_by(|&p, &q| x[p].total_cmp(&x[q]));
        Ok((idx.iter().map(|&k| x[k]).collect(), idx.iter().map(|&k| w[k] / s).collect()))
    };
    let (sa, na) = prep(a, wa)?;
    let (sb, nb) = prep(b, wb)?;
    Ok(cdf_gap(&sa, &na, &sb, &nb))
}

/// Per-direction values of a sliced W1 estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct SlicedW1 {
    pub per_direction: Vec<f64>,
    pub estimate: Estimate,
}

fn directions(dim: usize, params: &MetricParams) -> Vec<f64> {
    if dim == 1 {
        return vec![1.0];
    }
    let mut rng = RngStream::new(params.direction_seed, 0)
        .with(0, dim as u64, Purpose::Directions)
        .rng();
    let mut out = Vec::with_capacity(params.slices * dim);
    for _ in 0..params.slices {
        loop {
            let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 1e-12 {
                out.extend(v.iter().map(|x| x / n));
                break;
            }
        }
    }
    out
}

fn project(points: &[f64], dim: usize, u: &[f64]) -> Vec<f64> {
    points
        .chunks(dim)
        .map(|p| p.iter().zip(u).map(|(x, y)| x * y).sum())
        .collect()
}

fn sliced(
    a: &[f64],
    wa: Option<&[f64]>,
    b: &[f64],
    wb: Option<&[f64]>,
    dim: usize,
    params: &MetricParams,
) -> Result<SlicedW1> {
    params.validate()?;
    if dim == 0 || a.is_empty() || b.is_empty() || a.len() % dim != 0 || b.len() % dim != 0 {
        return precondition("point clouds must be nonempty with whole vectors");
    }
    let dirs = directions(dim, params);
    let mut per = Vec::with_capacity(dirs.len() / dim);
    for u in dirs.chunks(dim) {
        let pa = project(a, dim, u);
        let pb = project(b, dim, u);
        let v = match (wa, wb) {
            (None, None) => w1_1d(&pa, &pb)?,
            _ => {
                let ua = vec![1.0; pa.len()];
                let ub = vec![1.0; pb.len()];
                w1_1d_weighted(&pa, wa.unwrap_or(&ua), &pb, wb.unwrap_or(&ub))?
            }
        };
        per.push(v);
    }
    let estimate = Estimate::from_samples(&per);
    Ok(SlicedW1 { per_direction: per, estimate })
}

/// Sliced W1 between two clouds in `R^dim`, averaged over random unit
/// directions drawn from `params.direction_seed`. In one dimension it is the
/// exact W1.
pub fn w1_sliced(a: &[f64], b: &[f64], dim: usize, params: &MetricParams) -> Result<SlicedW1> {
    sliced(a, None, b, None, dim, params)
}

/// Sliced W1 where the second cloud carries importance weights.
pub fn w1_sliced_weighted(a: &[f64], b: &[f64], wb: &[f64], dim: usize, params: &MetricParams) -> Result<SlicedW1> {
    sliced(a, None, b, Some(wb), dim, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Minimum-cost perfect matching by exhaustive dynamic programming over
    /// subsets (Held-Karp style), independent of any sorting argument.
    fn assignment_oracle(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len();
        let mut dp = vec![f64::INFINITY; 1 << n];
        dp[0] = 0.0;
        for mask in 0usize..(1 << n) {
            let i = mask.count_ones() as usize;
            if i >= n || !dp[mask].is_finite() {
                continue;
            }
            for j in 0..n {
                if mask & (1 << j) == 0 {
                    let next = mask | (1 << j);
                    let c = dp[mask] + (a[i] - b[j]).abs();
                    if c < dp[next] {
                        dp[next] = c;
                    }
                }
            }
        }
        dp[(1 << n) - 1] / n as f64
    }

    #[test]
    fn simple_pairing() {
        assert_eq!(w1_1d(&[0.0, 2.0], &[1.0, 3.0]).unwrap(), 1.0);
        assert_eq!(w1_1d(&[3.0, 1.0, 2.0], &[2.0, 3.0, 1.0]).unwrap(), 0.0);
        assert!(w1_1d(&[], &[1.0]).is_err());
    }

    #[test]
    fn matches_assignment_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..5 {
            let a: Vec<f64> = (0..20).map(|_| rng.random_range(-3.0..3.0)).collect();
            let b: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..5.0)).collect();
            let w = w1_1d(&a, &b).unwrap();
            let o = assignment_oracle(&a, &b);
            assert!((w - o).abs() <= 1e-12, "{w} vs {o}");
        }
    }

    #[test]
    fn unequal_sizes_use_distribution_functions() {
        // {0} vs {0, 1}: F differ by 1/2 on [0, 1).
        assert!((w1_1d(&[0.0], &[0.0, 1.0]).unwrap() - 0.5).abs() < 1e-15);
        // Replicating a sample does not change its law.
        let a = [0.3, -1.0, 2.0];
        let b = [1.0, 0.0, 0.5, 4.0];
        let a2: Vec<f64> = a.iter().chain(a.iter()).copied().collect();
        let b3: Vec<f64> = b.iter().chain(b.iter()).chain(b.iter()).copied().collect();
        let direct = w1_1d(&a, &b).unwrap();
        let w12: Vec<f64> = a.iter().cycle().take(12).copied().collect();
        let v12: Vec<f64> = b3.clone();
        assert!((direct - w1_1d(&w12, &v12).unwrap()).abs() < 1e-12);
        assert!((direct - w1_1d(&a2, &b).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn weighted_matches_replication() {
        let a = [0.0, 1.0, 2.0];
        let b = [0.5, 3.0];
        let wb = [2.0, 1.0];
        let rep = [0.5, 0.5, 3.0];
        let x = w1_1d_weighted(&a, &[1.0; 3], &b, &wb).unwrap();
        assert!((x - w1_1d(&a, &rep).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn sliced_in_one_dimension_is_exact() {
        let a = [0.3, 1.0, -2.0];
        let b = [1.0, 1.5, 0.0];
        let s = w1_sliced(&a, &b, 1, &MetricParams::default()).unwrap();
        assert_eq!(s.estimate.mean, w1_1d(&a, &b).unwrap());
        assert_eq!(w1_sliced(&a, &a, 1, &MetricParams::default()).unwrap().estimate.mean, 0.0);
    }

    #[test]
    fn sliced_translation_matches_sphere_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dim in [2usize, 3] {
            let a: Vec<f64> = (0..200 * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut v = vec![0.0; dim];
            v[0] = 0.6;
            v[1] = 0.8;
            let b: Vec<f64> = a.chunks(dim).flat_map(|p| p.iter().zip(&v).map(|(x, y)| x + y).collect::<Vec<_>>()).collect();
            let params = MetricParams { slices: 400, direction_seed: 5, ..Default::default() };
            let s = w1_sliced(&a, &b, dim, &params).unwrap();
            // E|<v,u>| for u uniform on the sphere, by quadrature in the polar angle
            // measured from v: density ∝ sin^{dim-2}(θ).
            let n = 200_000;
            let (mut num, mut den) = (0.0, 0.0);
            for i in 0..n {
                let th = (i as f64 + 0.5) * std::f64::consts::PI / n as f64;
                let w = th.sin().powi(dim as i32 - 2);
                num += w * th.cos().abs();
                den += w;
            }
            let expect = num / den;
            assert!(
                (s.estimate.mean - expect).abs() <= 4.0 * s.estimate.se,
                "dim {dim}: {} vs {expect} (se {})",
                s.estimate.mean,
                s.estimate.se
            );
        }
    }

    proptest! {
        #[test]
        fn w1_is_a_metric(
            a in prop::collection::vec(-10.0f64..10.0, 8),
            b in prop::collection::vec(-10.0f64..10.0, 8),
            c in prop::collection::vec(-10.0f64..10.0, 8),
        ) {
            let ab = w1_1d(&a, &b).unwrap();
            let ba = w1_1d(&b, &a).unwrap();
            let bc = w1_1d(&b, &c).unwrap();
            let ac = w1_1d(&a, &c).unwrap();
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert!(ac <= ab + bc + 1e-12);
            prop_assert_eq!(w1_1d(&a, &a).unwrap(), 0.0);
            let mut sa = a.clone();
            sa.sort_by(f64::total_cmp);
            let mut sb = b.clone();
            sb.sort_by(f64::total_cmp);
            prop_assert_eq!(ab == 0.0, sa == sb);
        }
    }
}
