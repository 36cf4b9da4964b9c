use rand::Rng;

use crate::error::{precondition, Result};
use crate::model::{brownian_increments, PathBundle, Purpose, RngStream, TimeGrid};

use super::replicate;

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingResult {
    pub h: f64,
    /// Merge time, `T` when the pair never meets.
    pub tau: f64,
    pub merged: bool,
    /// Lower and upper path of the coupled pair, when requested.
    pub pair: Option<PathBundle>,
}

/// Couples a Brownian path started at 0 with its mirror image started at `h`.
/// They meet when `B` first reaches `h/2`; a crossing between nodes is detected
/// with the Brownian-bridge probability, and the merge time is then put at the
/// middle of the step.
pub fn reflection_coupling(
    h: f64,
    grid: &TimeGrid,
    reps: usize,
    stream: &RngStream,
    keep_paths: bool,
) -> Result<Vec<CouplingResult>> {
    if !(h >= 0.0) || !h.is_finite() {
        return precondition(format!("gap must be finite and nonnegative, got {h}"));
    }
    replicate(reps, |r| coupling_replication(h, grid, stream, r, keep_paths))
}

fn coupling_replication(h: f64, grid: &TimeGrid, stream: &RngStream, rep: u64, keep: bool) -> Result<CouplingResult> {
    let dt = grid.dt();
    let steps = grid.steps();
    let db = brownian_increments(grid, 1, &stream.with(rep, 0, Purpose::CommonNoise));
    let mut bridge = stream.with(rep, 0, Purpose::Bridge).rng();
    let level = 0.5 * h;
    let mut merge_step = None;
    if h > 0.0 {
        let mut b = 0.0;
        for (m, inc) in db.iter().enumerate() {
            let next = b + inc;
            let u: f64 = bridge.random();
            let crossed = next >= level || u < (-2.0 * (level - b) * (level - next) / dt).exp();
            if crossed {
                merge_step = Some(m);
                break;
            }
            b = next;
        }
    }
    let (tau, merged) = if h == 0.0 {
        (0.0, true)
    } else {
        match merge_step {
            Some(m) => (grid.time(m) + 0.5 * dt, true),
            None => (grid.horizon(), false),
        }
    };
    let pair = if keep {
        let lower = PathBundle::from_increments(*grid, &[0.0], &db, 1.0)?;
        let mut values = lower.values().to_vec();
        // Upper path mirrors the lower one until the merge step, then follows it.
        let last_mirrored = if h == 0.0 { None } else { Some(merge_step.unwrap_or(steps)) };
        for m in 0..=steps {
            let mirrored = matches!(last_mirrored, Some(k) if m <= k);
            values.push(if mirrored { h - values[m] } else { values[m] });
        }
        Some(PathBundle::from_values(*grid, 1, 2, values)?)
    } else {
        None
    };
    Ok(CouplingResult { h, tau, merged, pair })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{experiment_key, make_grid};

    fn stream() -> RngStream {
        RngStream::new(9, experiment_key("coupling-test"))
    }

    #[test]
    fn zero_gap_merges_at_once() {
        let g = make_grid(1.0, 16).unwrap();
        let res = reflection_coupling(0.0, &g, 20, &stream(), true).unwrap();
        for r in res {
            assert_eq!(r.tau, 0.0);
            let p = r.pair.unwrap();
            assert_eq!(p.path(0), p.path(1));
        }
    }

    #[test]
    fn tau_is_capped() {
        let g = make_grid(1.0, 16).unwrap();
        for r in reflection_coupling(3.0, &g, 200, &stream(), false).unwrap() {
            assert!(r.tau <= 1.0 && r.tau > 0.0);
            assert_eq!(r.merged, r.tau < 1.0);
        }
    }

    #[test]
    fn pair_is_mirrored_before_merge() {
        let g = make_grid(1.0, 64).unwrap();
        for r in reflection_coupling(0.8, &g, 50, &stream(), true).unwrap() {
            let p = r.pair.unwrap();
            let first_equal = (0..=64).find(|&m| p.point(0, m) == p.point(1, m));
            for m in 0..first_equal.unwrap_or(65) {
                assert!((p.point(0, m)[0] + p.point(1, m)[0] - 0.8).abs() < 1e-12);
            }
            if r.merged {
                assert!(first_equal.is_some());
            }
        }
    }

    #[test]
    fn rejects_negative_gap() {
        let g = make_grid(1.0, 4).unwrap();
        assert!(reflection_coupling(-0.1, &g, 1, &stream(), false).is_err());
    }
}
