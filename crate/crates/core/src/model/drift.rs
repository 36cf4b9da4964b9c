use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{config, Error, Result};

pub type DriftFn = Arc<dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync>;

/// `sign(0) = +1`.
#[inline]
pub fn sign(u: f64) -> f64 {
    if u >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothness {
    LipschitzX,
    Measurable,
}

#[derive(Clone)]
pub enum DriftKind {
    Zero,
    Constant(Vec<f64>),
    /// `tanh(x0 - x)` componentwise.
    TanhGap,
    /// `sign(x0 - x)` componentwise.
    SignGap,
    /// `tanh(x0)` componentwise; ignores the state.
    TanhOfMean,
    Custom(DriftFn),
}

impl fmt::Debug for DriftKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DriftKind::Zero => write!(f, "Zero"),
            DriftKind::Constant(c) => write!(f, "Constant({c:?})"),
            DriftKind::TanhGap => write!(f, "TanhGap"),
            DriftKind::SignGap => write!(f, "SignGap"),
            DriftKind::TanhOfMean => write!(f, "TanhOfMean"),
            DriftKind::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// The coefficient `b(x, x0)` with its declared sup bound and Lipschitz
/// constant in `x`.
#[derive(Debug, Clone)]
pub struct DriftSpec {
    pub name: String,
    kind: DriftKind,
    dim: usize,
    bound: f64,
    lip_x: Option<f64>,
    smoothness: Smoothness,
}

impl DriftSpec {
    pub fn zero(dim: usize) -> Self {
        Self {
            name: "zero".into(),
            kind: DriftKind::Zero,
            dim,
            bound: 0.0,
            lip_x: Some(0.0),
            smoothness: Smoothness::LipschitzX,
        }
    }

    pub fn constant(c: Vec<f64>) -> Self {
        let bound = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        Self {
            name: "constant".into(),
            dim: c.len(),
            kind: DriftKind::Constant(c),
            bound,
            lip_x: Some(0.0),
            smoothness: Smoothness::LipschitzX,
        }
    }

    pub fn tanh_gap(dim: usize) -> Self {
        Self {
            name: "tanh_gap".into(),
            kind: DriftKind::TanhGap,
            dim,
            bound: (dim as f64).sqrt(),
            lip_x: Some(1.0),
            smoothness: Smoothness::LipschitzX,
        }
    }

    pub fn sign_gap(dim: usize) -> Self {
        Self {
            name: "sign_gap".into(),
            kind: DriftKind::SignGap,
            dim,
            bound: (dim as f64).sqrt(),
            lip_x: None,
            smoothness: Smoothness::Measurable,
        }
    }

    pub fn tanh_of_mean(dim: usize) -> Self {
        Self {
            name: "tanh_of_mean".into(),
            kind: DriftKind::TanhOfMean,
            dim,
            bound: (dim as f64).sqrt(),
            lip_x: Some(0.0),
            smoothness: Smoothness::LipschitzX,
        }
    }

    pub fn custom(
        name: impl Into<String>,
        dim: usize,
        bound: f64,
        lip_x: Option<f64>,
        f: DriftFn,
    ) -> Result<Self> {
        if dim == 0 {
            return config("drift dimension must be positive");
        }
        if !(bound >= 0.0 && bound.is_finite()) {
            return config(format!("drift bound must be finite and nonnegative, got {bound}"));
        }
        if let Some(k) = lip_x {
            if !(k >= 0.0 && k.is_finite()) {
                return config(format!("Lipschitz constant must be finite and nonnegative, got {k}"));
            }
        }
        Ok(Self {
            name: name.into(),
            kind: DriftKind::Custom(f),
            dim,
            bound,
            lip_x,
            smoothness: if lip_x.is_some() {
                Smoothness::LipschitzX
            } else {
                Smoothness::Measurable
            },
        })
    }

    pub fn kind(&self) -> &DriftKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn lip_x(&self) -> Option<f64> {
        self.lip_x
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn is_lipschitz_x(&self) -> bool {
        self.smoothness == Smoothness::LipschitzX
    }

    /// Drift at `(x, x0)` without the bound check.
    #[inline]
    pub fn eval(&self, x: &[f64], x0: &[f64], out: &mut [f64]) {
        match &self.kind {
            DriftKind::Zero => out.iter_mut().for_each(|o| *o = 0.0),
            DriftKind::Constant(c) => out.copy_from_slice(c),
            DriftKind::TanhGap => {
                for ((o, a), z) in out.iter_mut().zip(x).zip(x0) {
                    *o = (z - a).tanh();
                }
            }
            DriftKind::SignGap => {
                for ((o, a), z) in out.iter_mut().zip(x).zip(x0) {
                    *o = sign(z - a);
                }
            }
            DriftKind::TanhOfMean => {
                for (o, z) in out.iter_mut().zip(x0) {
                    *o = z.tanh();
                }
            }
            DriftKind::Custom(f) => f(x, x0, out),
        }
    }

    /// Drift at `(x, x0)`, failing if the value exceeds the declared bound.
    #[inline]
    pub fn eval_checked(&self, x: &[f64], x0: &[f64], out: &mut [f64]) -> Result<()> {
        self.eval(x, x0, out);
        let norm2: f64 = out.iter().map(|v| v * v).sum();
        if !(norm2 <= self.bound * self.bound * (1.0 + 1e-12)) {
            return Err(Error::DriftBound {
                value: norm2.sqrt(),
                bound: self.bound,
                x: x.to_vec(),
                x0: x0.to_vec(),
            });
        }
        Ok(())
    }

    /// Scalar fast path for `d = 1`.
    #[inline]
    pub fn eval1(&self, x: f64, x0: f64) -> f64 {
        match &self.kind {
            DriftKind::Zero => 0.0,
            DriftKind::Constant(c) => c[0],
            DriftKind::TanhGap => (x0 - x).tanh(),
            DriftKind::SignGap => sign(x0 - x),
            DriftKind::TanhOfMean => x0.tanh(),
            DriftKind::Custom(f) => {
                let mut o = [0.0];
                f(&[x], &[x0], &mut o);
                o[0]
            }
        }
    }

    #[inline]
    pub fn eval1_checked(&self, x: f64, x0: f64) -> Result<f64> {
        let v = self.eval1(x, x0);
        if !(v.abs() <= self.bound * (1.0 + 1e-12)) {
            return Err(Error::DriftBound {
                value: v,
                bound: self.bound,
                x: vec![x],
                x0: vec![x0],
            });
        }
        Ok(v)
    }

    /// Probes the declared bound and, for `LipschitzX`, the Lipschitz constant
    /// with finite differences at random points of `[-radius, radius]^d`.
    pub fn probe<R: Rng>(&self, rng: &mut R, samples: usize, radius: f64) -> Result<()> {
        let d = self.dim;
        let mut x = vec![0.0; d];
        let mut y = vec![0.0; d];
        let mut z = vec![0.0; d];
        let mut bx = vec![0.0; d];
        let mut by = vec![0.0; d];
        for _ in 0..samples {
            for i in 0..d {
                x[i] = rng.random_range(-radius..radius);
                z[i] = rng.random_range(-radius..radius);
                let scale = 10f64.powf(rng.random_range(-6.0..0.0));
                y[i] = x[i] + scale * rng.random_range(-1.0..1.0);
            }
            self.eval_checked(&x, &z, &mut bx)?;
            self.eval_checked(&y, &z, &mut by)?;
            if let Some(k) = self.lip_x {
                let num: f64 = bx.iter().zip(&by).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                let den: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                if den > 0.0 && num > 1.01 * k * den + 1e-14 {
                    return Err(Error::Precondition(format!(
                        "drift {} has difference ratio {} above declared Lipschitz constant {k}",
                        self.name,
                        num / den
                    )));
                }
            }
        }
        Ok(())
    }
}
