use crate::error::{precondition, Error, Result};
use crate::flow::group_points;
use crate::model::{
    brownian_increments, experiment_key, FixedSum, PathBundle, Purpose, RngStream, SimConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Interaction through the empirical mean, no individual noise.
    Natural,
    /// Interaction through the control-variate mean started at the mean of `μ0`.
    Prepared,
    /// Individual noise; the common process is driven by the mean particle drift.
    CaseB,
}

/// Every random input of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleInputs {
    /// `(particle, comp)`.
    pub initial: Vec<f64>,
    /// `(step, comp)`.
    pub common: Vec<f64>,
    /// `(particle, step, comp)`; present for `CaseB` only.
    pub individual: Option<Vec<f64>>,
}

/// Draws the inputs of replication `rep`. Initial points come from one
/// stream; the individual noise of particle `i` from its own stream.
pub fn draw_inputs(config: &SimConfig, scheme: Scheme, base: &RngStream, rep: u64) -> Result<ParticleInputs> {
    let d = config.dim();
    let initial = config
        .init
        .sample(config.n_particles, &mut base.with(rep, 0, Purpose::InitialDraws).rng());
    let common = brownian_increments(&config.grid, d, &base.with(rep, 0, Purpose::CommonNoise));
    let individual = match scheme {
        Scheme::CaseB => {
            let mut v = Vec::with_capacity(config.n_particles * config.grid.steps() * d);
            for i in 0..config.n_particles {
                v.extend(brownian_increments(
                    &config.grid,
                    d,
                    &base.with(rep, i as u64, Purpose::IndividualNoise),
                ));
            }
            Some(v)
        }
        _ => None,
    };
    Ok(ParticleInputs {
        initial,
        common,
        individual,
    })
}

/// Particle trajectories. Without individual noise, particles that start at
/// the same point coincide for all time and are stored once.
#[derive(Debug, Clone, PartialEq)]
pub enum ParticlePaths {
    Full(PathBundle),
    Grouped { groups: PathBundle, members: Vec<usize> },
}

impl ParticlePaths {
    pub fn n_particles(&self) -> usize {
        match self {
            ParticlePaths::Full(p) => p.n_paths(),
            ParticlePaths::Grouped { members, .. } => members.len(),
        }
    }

    fn bundle(&self) -> &PathBundle {
        match self {
            ParticlePaths::Full(p) => p,
            ParticlePaths::Grouped { groups, .. } => groups,
        }
    }

    fn row(&self, i: usize) -> usize {
        match self {
            ParticlePaths::Full(_) => i,
            ParticlePaths::Grouped { members, .. } => members[i],
        }
    }

    pub fn point(&self, i: usize, m: usize) -> &[f64] {
        self.bundle().point(self.row(i), m)
    }

    pub fn path(&self, i: usize) -> &[f64] {
        self.bundle().path(self.row(i))
    }

    /// Expanded bundle with one path per particle.
    pub fn to_bundle(&self) -> PathBundle {
        match self {
            ParticlePaths::Full(p) => p.clone(),
            ParticlePaths::Grouped { groups, members } => {
                let mut v = Vec::with_capacity(members.len() * groups.path(0).len());
                for &g in members {
                    v.extend_from_slice(groups.path(g));
                }
                PathBundle::from_values(*groups.grid(), groups.dim(), members.len(), v)
                    .expect("expanded paths keep their shape")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParticleRun {
    pub scheme: Scheme,
    pub config: SimConfig,
    /// The common process: empirical mean (natural) or `X^{0,N}`.
    pub x0_path: PathBundle,
    pub particles: ParticlePaths,
    pub inputs: ParticleInputs,
}

fn mean_of(acc: &mut FixedSum, rows: &[f64], counts: &[u64], d: usize, total: u64, out: &mut [f64]) -> Result<()> {
    acc.clear();
    for (g, c) in counts.iter().enumerate() {
        acc.add(&rows[g * d..(g + 1) * d], *c);
    }
    acc.mean_into(total, out)
        .ok_or_else(|| Error::Numerical("particle values became non-finite".into()))
}

fn run_grouped(config: &SimConfig, scheme: Scheme, inputs: ParticleInputs) -> Result<ParticleRun> {
    let d = config.dim();
    let grid = config.grid;
    let dt = grid.dt();
    let steps = grid.steps();
    let (atoms, counts, members) = group_points(&inputs.initial, d);
    let total = members.len() as u64;
    let ng = counts.len();
    let mut acc = FixedSum::new(d);

    let mut x = atoms.clone();
    let mut gvals = vec![0.0; ng * (steps + 1) * d];
    let mut x0 = vec![0.0; (steps + 1) * d];
    let mut cur0 = vec![0.0; d];
    match scheme {
        Scheme::Natural => mean_of(&mut acc, &x, &counts, d, total, &mut cur0)?,
        _ => cur0.copy_from_slice(config.init.mean()),
    }
    let mut b = vec![0.0; ng * d];
    let mut mean_b = vec![0.0; d];
    for m in 0..=steps {
        x0[m * d..(m + 1) * d].copy_from_slice(&cur0);
        for g in 0..ng {
            gvals[(g * (steps + 1) + m) * d..(g * (steps + 1) + m + 1) * d].copy_from_slice(&x[g * d..(g + 1) * d]);
        }
        if m == steps {
            break;
        }
        for g in 0..ng {
            config
                .drift
                .eval_checked(&x[g * d..(g + 1) * d], &cur0, &mut b[g * d..(g + 1) * d])?;
        }
        let dw = &inputs.common[m * d..(m + 1) * d];
        for g in 0..ng {
            for c in 0..d {
                x[g * d + c] += b[g * d + c] * dt + config.sigma0 * dw[c];
            }
        }
        match scheme {
            Scheme::Natural => mean_of(&mut acc, &x, &counts, d, total, &mut cur0)?,
            _ => {
                mean_of(&mut acc, &b, &counts, d, total, &mut mean_b)?;
                for c in 0..d {
                    cur0[c] += mean_b[c] * dt + config.sigma0 * dw[c];
                }
            }
        }
    }
    let groups = PathBundle::from_values(grid, d, ng, gvals)?;
    Ok(ParticleRun {
        scheme,
        config: config.clone(),
        x0_path: PathBundle::from_values(grid, d, 1, x0)?,
        particles: ParticlePaths::Grouped { groups, members },
        inputs,
    })
}

fn run_full(config: &SimConfig, inputs: ParticleInputs) -> Result<ParticleRun> {
    let d = config.dim();
    let n = config.n_particles;
    let grid = config.grid;
    let dt = grid.dt();
    let steps = grid.steps();
    let ind = inputs
        .individual
        .as_ref()
        .ok_or_else(|| Error::Precondition("individual noise missing".into()))?;
    if ind.len() != n * steps * d {
        return precondition("individual noise has the wrong shape");
    }
    let mut acc = FixedSum::new(d);
    let mut x = inputs.initial.clone();
    let mut vals = vec![0.0; n * (steps + 1) * d];
    let mut x0 = vec![0.0; (steps + 1) * d];
    let mut cur0 = config.init.mean().to_vec();
    let mut b = vec![0.0; d];
    let mut mean_b = vec![0.0; d];
    for m in 0..=steps {
        x0[m * d..(m + 1) * d].copy_from_slice(&cur0);
        for i in 0..n {
            vals[(i * (steps + 1) + m) * d..(i * (steps + 1) + m + 1) * d].copy_from_slice(&x[i * d..(i + 1) * d]);
        }
        if m == steps {
            break;
        }
        let dw0 = &inputs.common[m * d..(m + 1) * d];
        acc.clear();
        for i in 0..n {
            let xi = &mut x[i * d..(i + 1) * d];
            config.drift.eval_checked(xi, &cur0, &mut b)?;
            acc.add(&b, 1);
            let dwi = &ind[(i * steps + m) * d..(i * steps + m + 1) * d];
            for c in 0..d {
                xi[c] += b[c] * dt + config.sigma * dwi[c] + config.sigma0 * dw0[c];
            }
        }
        acc.mean_into(n as u64, &mut mean_b)
            .ok_or_else(|| Error::Numerical("drift values became non-finite".into()))?;
        for c in 0..d {
            cur0[c] += mean_b[c] * dt + config.sigma0 * dw0[c];
        }
    }
    Ok(ParticleRun {
        scheme: Scheme::CaseB,
        config: config.clone(),
        x0_path: PathBundle::from_values(grid, d, 1, x0)?,
        particles: ParticlePaths::Full(PathBundle::from_values(grid, d, n, vals)?),
        inputs,
    })
}

/// Runs a scheme on explicitly supplied random inputs.
pub fn run_with_inputs(config: &SimConfig, scheme: Scheme, inputs: ParticleInputs) -> Result<ParticleRun> {
    match scheme {
        Scheme::Natural | Scheme::Prepared => config.validate_case_a()?,
        Scheme::CaseB => config.validate_case_b()?,
    }
    let d = config.dim();
    if inputs.initial.len() != config.n_particles * d || inputs.common.len() != config.grid.steps() * d {
        return precondition("inputs do not match the configuration");
    }
    match scheme {
        Scheme::CaseB => run_full(config, inputs),
        _ => run_grouped(config, scheme, inputs),
    }
}

fn run(config: &SimConfig, scheme: Scheme) -> Result<ParticleRun> {
    match scheme {
        Scheme::Natural | Scheme::Prepared => config.validate_case_a()?,
        Scheme::CaseB => config.validate_case_b()?,
    }
    let base = RngStream::new(config.seed, experiment_key("particles"));
    let inputs = draw_inputs(config, scheme, &base, 0)?;
    run_with_inputs(config, scheme, inputs)
}

/// Euler scheme for the natural system: the interaction argument is the
/// empirical mean of the particles.
pub fn run_natural(config: &SimConfig) -> Result<ParticleRun> {
    run(config, Scheme::Natural)
}

/// Euler scheme for the well-prepared system.
pub fn run_prepared(config: &SimConfig) -> Result<ParticleRun> {
    run(config, Scheme::Prepared)
}

/// Euler scheme with individual noise.
pub fn run_case_b(config: &SimConfig) -> Result<ParticleRun> {
    run(config, Scheme::CaseB)
}

impl ParticleRun {
    /// Largest deviation, over nodes and components, from the algebraic
    /// identity tying the common process to the particle mean.
    pub fn identity_defect(&self) -> f64 {
        let d = self.config.dim();
        let grid = self.config.grid;
        let n = self.particles.n_particles();
        let steps = grid.steps();
        let mut acc = FixedSum::new(d);
        let mut mean0 = vec![0.0; d];
        let mut mean = vec![0.0; d];
        for i in 0..n {
            acc.add(self.particles.point(i, 0), 1);
        }
        if acc.mean_into(n as u64, &mut mean0).is_none() {
            return f64::INFINITY;
        }
        let mut w_mean = vec![0.0; d];
        let mut cum = vec![0.0; n * d];
        let mut worst: f64 = 0.0;
        for m in 0..=steps {
            acc.clear();
            for i in 0..n {
                acc.add(self.particles.point(i, m), 1);
            }
            if acc.mean_into(n as u64, &mut mean).is_none() {
                return f64::INFINITY;
            }
            if let (Scheme::CaseB, Some(ind)) = (self.scheme, &self.inputs.individual) {
                acc.clear();
                for i in 0..n {
                    acc.add(&cum[i * d..(i + 1) * d], 1);
                }
                acc.mean_into(n as u64, &mut w_mean);
                if m < steps {
                    for i in 0..n {
                        for c in 0..d {
                            cum[i * d + c] += ind[(i * steps + m) * d + c];
                        }
                    }
                }
            }
            let x0 = self.x0_path.point(0, m);
            for c in 0..d {
                let expect = match self.scheme {
                    Scheme::Natural => mean[c],
                    Scheme::Prepared => mean[c] + self.config.init.mean()[c] - mean0[c],
                    Scheme::CaseB => {
                        mean[c] + self.config.init.mean()[c] - mean0[c] - self.config.sigma * w_mean[c]
                    }
                };
                worst = worst.max((x0[c] - expect).abs());
            }
        }
        worst
    }
}
