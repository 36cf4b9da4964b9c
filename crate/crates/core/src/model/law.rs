use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::rng::RngStream;
use crate::error::{config, precondition, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LawRepr {
    /// Points laid out `(atom, component)`.
    Atoms { points: Vec<f64>, weights: Vec<f64> },
    /// Covariance row-major `d x d`.
    Gaussian { mean: Vec<f64>, cov: Vec<f64> },
    /// One-dimensional law `p δ_a + (1 - p) δ_b`.
    TwoPoint { a: f64, b: f64, p: f64 },
}

/// Initial law `μ0` with its mean.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialLaw {
    dim: usize,
    repr: LawRepr,
    mean: Vec<f64>,
    chol: Vec<f64>,
}

fn cholesky(a: &[f64], d: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = a[i * d + j];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if s < 0.0 {
                    return None;
                }
                l[i * d + i] = s.sqrt();
            } else if l[j * d + j] > 0.0 {
                l[i * d + j] = s / l[j * d + j];
            } else if s.abs() > 1e-14 {
                return None;
            }
        }
    }
    Some(l)
}

/// Gauss-Hermite nodes and weights for the weight `exp(-x^2)`.
fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    const PIM4: f64 = 0.751_125_544_464_942_5;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.16667),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..200 {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-14 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

impl InitialLaw {
    pub fn atoms(dim: usize, points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return config("dimension must be positive");
        }
        if weights.is_empty() {
            return config("atom list is empty");
        }
        if points.len() != weights.len() * dim {
            return config(format!(
                "{} coordinates do not match {} atoms in dimension {dim}",
                points.len(),
                weights.len()
            ));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return config("atom coordinates must be finite");
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return config("atom weights must be nonnegative");
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return config(format!("atom weights sum to {total}, not 1"));
        }
        let mut mean = vec![0.0; dim];
        for (i, w) in weights.iter().enumerate() {
            for c in 0..dim {
                mean[c] += w * points[i * dim + c];
            }
        }
        Ok(Self {
            dim,
            repr: LawRepr::Atoms { points, weights },
            mean,
            chol: Vec::new(),
        })
    }

    pub fn uniform_atoms(dim: usize, points: Vec<f64>) -> Result<Self> {
        if dim == 0 || points.is_empty() {
            return config("atom list is empty");
        }
        let n = points.len() / dim;
        Self::atoms(dim, points, vec![1.0 / n as f64; n])
    }

    pub fn dirac(point: Vec<f64>) -> Result<Self> {
        Self::atoms(point.len(), point, vec![1.0])
    }

    pub fn gaussian(mean: Vec<f64>, cov: Vec<f64>) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 {
            return config("dimension must be positive");
        }
        if cov.len() != dim * dim {
            return config("covariance must be d x d");
        }
        for i in 0..dim {
            for j in 0..dim {
                if (cov[i * dim + j] - cov[j * dim + i]).abs() > 1e-12 {
                    return config("covariance must be symmetric");
                }
            }
        }
        let chol = cholesky(&cov, dim).ok_or_else(|| {
            crate::Error::Config("covariance is not positive semidefinite".into())
        })?;
        Ok(Self {
            dim,
            repr: LawRepr::Gaussian {
                mean: mean.clone(),
                cov,
            },
            mean,
            chol,
        })
    }

    pub fn two_point(a: f64, b: f64, p: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) {
            return config("two-point atoms must be finite");
        }
        if !(0.0..=1.0).contains(&p) {
            return config(format!("two-point probability {p} outside [0, 1]"));
        }
        Ok(Self {
            dim: 1,
            repr: LawRepr::TwoPoint { a, b, p },
            mean: vec![p * a + (1.0 - p) * b],
            chol: Vec::new(),
        })
    }

    pub fn from_repr(repr: LawRepr) -> Result<Self> {
        match repr {
            LawRepr::Atoms { points, weights } => {
                if weights.is_empty() {
                    return config("atom list is empty");
                }
                let dim = points.len() / weights.len();
                Self::atoms(dim, points, weights)
            }
            LawRepr::Gaussian { mean, cov } => Self::gaussian(mean, cov),
            LawRepr::TwoPoint { a, b, p } => Self::two_point(a, b, p),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn repr(&self) -> &LawRepr {
        &self.repr
    }

    /// Atomic view `(points, weights)`; `None` for the Gaussian family.
    pub fn as_atoms(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match &self.repr {
            LawRepr::Atoms { points, weights } => Some((points.clone(), weights.clone())),
            LawRepr::TwoPoint { a, b, p } => Some((vec![*a, *b], vec![*p, 1.0 - *p])),
            LawRepr::Gaussian { .. } => None,
        }
    }

    /// Atomic law: itself if already atomic, otherwise a tensor Gauss-Hermite
    /// rule with `nodes` points per axis.
    pub fn quadratize(&self, nodes: usize) -> Result<Self> {
        if let Some((p, w)) = self.as_atoms() {
            return Self::atoms(self.dim, p, w);
        }
        if nodes == 0 {
            return config("quadrature needs at least one node");
        }
        let d = self.dim;
        let (x, w) = gauss_hermite(nodes);
        let sqrt_pi = std::f64::consts::PI.sqrt();
        let total = nodes.pow(d as u32);
        let mut points = Vec::with_capacity(total * d);
        let mut weights = Vec::with_capacity(total);
        let mut z = vec![0.0; d];
        for idx in 0..total {
            let mut rem = idx;
            let mut wt = 1.0;
            for zc in z.iter_mut() {
                let j = rem % nodes;
                rem /= nodes;
                *zc = std::f64::consts::SQRT_2 * x[j];
                wt *= w[j] / sqrt_pi;
            }
            for i in 0..d {
                let mut v = self.mean[i];
                for k in 0..=i {
                    v += self.chol[i * d + k] * z[k];
                }
                points.push(v);
            }
            weights.push(wt);
        }
        let s: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|v| *v /= s);
        Self::atoms(d, points, weights)
    }

    /// Largest distance from the mean to the support; six standard deviations
    /// along the widest axis for the Gaussian family.
    pub fn support_radius(&self) -> f64 {
        match &self.repr {
            LawRepr::Gaussian { cov, .. } => {
                let tr: f64 = (0..self.dim).map(|i| cov[i * self.dim + i]).sum();
                6.0 * tr.sqrt()
            }
            _ => {
                let (p, w) = self.as_atoms().unwrap_or_default();
                let d = self.dim;
                (0..w.len())
                    .filter(|&i| w[i] > 0.0)
                    .map(|i| {
                        (0..d)
                            .map(|c| (p[i * d + c] - self.mean[c]).powi(2))
                            .sum::<f64>()
                            .sqrt()
                    })
                    .fold(0.0, f64::max)
            }
        }
    }

    /// `n` i.i.d. draws laid out `(draw, component)`.
    pub fn sample<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        let d = self.dim;
        let mut out = Vec::with_capacity(n * d);
        match &self.repr {
            LawRepr::TwoPoint { a, b, p } => {
                for _ in 0..n {
                    let u: f64 = rng.random();
                    out.push(if u < *p { *a } else { *b });
                }
            }
            LawRepr::Atoms { points, weights } => {
                if weights.len() == 1 {
                    for _ in 0..n {
                        out.extend_from_slice(&points[..d]);
                    }
                } else {
                    let mut cum = Vec::with_capacity(weights.len());
                    let mut s = 0.0;
                    for w in weights {
                        s += w;
                        cum.push(s);
                    }
                    for _ in 0..n {
                        let u: f64 = rng.random::<f64>() * s;
                        let i = cum.partition_point(|c| *c <= u).min(weights.len() - 1);
                        out.extend_from_slice(&points[i * d..(i + 1) * d]);
                    }
                }
            }
            LawRepr::Gaussian { .. } => {
                let mut z = vec![0.0; d];
                for _ in 0..n {
                    for zc in z.iter_mut() {
                        *zc = StandardNormal.sample(rng);
                    }
                    for i in 0..d {
                        let mut v = self.mean[i];
                        for k in 0..=i {
                            v += self.chol[i * d + k] * z[k];
                        }
                        out.push(v);
                    }
                }
            }
        }
        out
    }
}

pub fn sample_initial(law: &InitialLaw, n: usize, stream: &RngStream) -> Result<Vec<f64>> {
    if n == 0 {
        return precondition("sample count must be at least 1");
    }
    Ok(law.sample(n, &mut stream.rng()))
}
