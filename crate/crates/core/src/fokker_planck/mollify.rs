use std::sync::Arc;

use crate::error::{precondition, Result};
use crate::model::{DriftFn, DriftSpec, FixedSum};

/// Lattice points per kernel half-width.
const NODES: usize = 4;

/// Lattice nodes `(j + ½) h` within `1/n` of `x`, with triangle weights.
fn stencil(x: f64, n: f64, h: f64, out: &mut Vec<(f64, f64)>) {
    out.clear();
    let r = 1.0 / n;
    let lo = ((x - r) / h - 0.5).ceil() as i64;
    let hi = ((x + r) / h - 0.5).floor() as i64;
    for j in lo..=hi {
        let y = (j as f64 + 0.5) * h;
        let w = 1.0 - n * (x - y).abs();
        if w > 0.0 {
            out.push((y, w));
        }
    }
}

/// `b^n(x, z) = Σ ρ(x - y_j) ρ(z - y_l) b(y_j, y_l) / Σ ρ(x - y_j) ρ(z - y_l)`,
/// with the triangle kernel `ρ` of half-width `1/n` in every coordinate and a
/// fixed lattice of spacing `h = 1/(4n)`. The lattice sum of the kernel does
/// not depend on the evaluation point, so `b^n` is a convex combination of
/// values of `b` and is Lipschitz in `x` with constant `2n |b| √d`.
pub fn mollify_drift(drift: &DriftSpec, n: usize) -> Result<DriftSpec> {
    if n == 0 {
        return precondition("smoothing index must be at least 1");
    }
    let d = drift.dim();
    let bound = drift.bound();
    let nf = n as f64;
    let h = 1.0 / (NODES as f64 * nf);
    let base = drift.clone();
    let f: DriftFn = Arc::new(move |x: &[f64], z: &[f64], out: &mut [f64]| {
        let mut stencils: Vec<Vec<(f64, f64)>> = vec![Vec::new(); 2 * d];
        for c in 0..d {
            stencil(x[c], nf, h, &mut stencils[c]);
            stencil(z[c], nf, h, &mut stencils[d + c]);
        }
        let mut idx = vec![0usize; 2 * d];
        let mut xs = vec![0.0; d];
        let mut zs = vec![0.0; d];
        let mut val = vec![0.0; d];
        let mut wval = vec![0.0; d];
        // Exact accumulation keeps odd drifts exactly odd.
        let mut acc = FixedSum::new(d);
        let mut total = FixedSum::new(1);
        'outer: loop {
            let mut w = 1.0;
            for c in 0..d {
                let (px, wx) = stencils[c][idx[c]];
                let (pz, wz) = stencils[d + c][idx[d + c]];
                xs[c] = px;
                zs[c] = pz;
                w *= wx * wz;
            }
            base.eval(&xs, &zs, &mut val);
            for c in 0..d {
                wval[c] = w * val[c];
            }
            acc.add(&wval, 1);
            total.add1(w);
            // Odometer over the tensor stencil.
            for a in 0..2 * d {
                idx[a] += 1;
                if idx[a] < stencils[a].len() {
                    continue 'outer;
                }
                idx[a] = 0;
            }
            break;
        }
        let mut t = [0.0];
        total.mean_into(1, &mut t);
        acc.mean_into(1, &mut wval);
        for c in 0..d {
            out[c] = wval[c] / t[0];
        }
    });
    DriftSpec::custom(
        format!("{}_mollified_{n}", drift.name),
        d,
        bound,
        Some(2.0 * nf * bound * (d as f64).sqrt()),
        f,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sign;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lattice_weights_sum_to_a_constant() {
        let mut st = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let x: f64 = rng.random_range(-3.0..3.0);
            stencil(x, 5.0, 1.0 / 20.0, &mut st);
            let s: f64 = st.iter().map(|p| p.1).sum();
            assert!((s - 4.0).abs() < 1e-12, "{s}");
        }
    }

    #[test]
    fn constant_is_preserved() {
        let b = mollify_drift(&DriftSpec::constant(vec![0.3, -0.2]), 3).unwrap();
        let mut o = [0.0; 2];
        b.eval(&[0.17, 2.0], &[-1.0, 0.4], &mut o);
        assert!((o[0] - 0.3).abs() < 1e-14 && (o[1] + 0.2).abs() < 1e-14);
    }

    #[test]
    fn odd_drift_vanishes_at_zero() {
        let f: DriftFn = Arc::new(|x, _z, o| o[0] = sign(x[0]));
        let s = DriftSpec::custom("sign", 1, 1.0, None, f).unwrap();
        for n in [1, 4, 16] {
            let b = mollify_drift(&s, n).unwrap();
            assert_eq!(b.eval1(0.0, 0.3), 0.0);
        }
    }

    #[test]
    fn smooth_drift_converges() {
        let t = DriftSpec::tanh_gap(1);
        let mut prev = f64::INFINITY;
        for n in [2, 8, 32] {
            let b = mollify_drift(&t, n).unwrap();
            let err = (-40..=40)
                .map(|i| {
                    let x = i as f64 * 0.05;
                    (b.eval1(x, 0.3) - t.eval1(x, 0.3)).abs()
                })
                .fold(0.0, f64::max);
            assert!(err <= 1.0 / n as f64, "n = {n}: {err}");
            assert!(err < prev);
            prev = err;
        }
    }

    #[test]
    fn declared_constants_hold() {
        let b = mollify_drift(&DriftSpec::sign_gap(1), 4).unwrap();
        assert_eq!(b.lip_x(), Some(8.0));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        b.probe(&mut rng, 2000, 2.0).unwrap();
        let b2 = mollify_drift(&DriftSpec::sign_gap(2), 2).unwrap();
        b2.probe(&mut rng, 500, 2.0).unwrap();
    }
}
