/// Order-independent sum of vectors.
///
/// Each component is rounded to a multiple of 2^-64 and accumulated in an
/// `i128`, so the result does not depend on the order of the terms. This makes
/// particle means invariant under relabelling, bit for bit, and lets a group of
/// `c` identical particles be added with one multiplication.
#[derive(Debug, Clone)]
pub(crate) struct FixedSum {
    acc: Vec<i128>,
    ok: bool,
}

const SCALE: f64 = 18_446_744_073_709_551_616.0; // 2^64
const LIMIT: f64 = 1.0e12;

impl FixedSum {
    pub fn new(d: usize) -> Self {
        Self {
            acc: vec![0; d],
            ok: true,
        }
    }

    pub fn clear(&mut self) {
        self.acc.iter_mut().for_each(|a| *a = 0);
        self.ok = true;
    }

    #[inline]
    pub fn add(&mut self, v: &[f64], count: u64) {
        for (a, &x) in self.acc.iter_mut().zip(v) {
            if !(x.abs() < LIMIT) {
                self.ok = false;
                continue;
            }
            *a += ((x * SCALE).round() as i128) * count as i128;
        }
    }

    #[inline]
    pub fn add1(&mut self, x: f64) {
        if !(x.abs() < LIMIT) {
            self.ok = false;
            return;
        }
        self.acc[0] += (x * SCALE).round() as i128;
    }

    /// Sum divided by `n`; `None` if a term was non-finite or out of range.
    pub fn mean_into(&self, n: u64, out: &mut [f64]) -> Option<()> {
        if !self.ok {
            return None;
        }
        for (o, &a) in out.iter_mut().zip(&self.acc) {
            *o = (a as f64 / SCALE) / n as f64;
        }
        Some(())
    }
}
