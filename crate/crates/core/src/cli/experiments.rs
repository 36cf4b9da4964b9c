//! The experiment registry. Each experiment reads its parameters (defaults
//! are the acceptance-scale values), validates them, runs, and returns table
//! rows plus the checks that turn the table into verdicts.

use rand::Rng;

use crate::error::{config, Error, Result};
use crate::flow::{solve_y_field, solve_y_prepared, AtomWeights, FlowOptions};
use crate::fokker_planck::{
    admissible_dt, coevolve_limit_b, coevolve_replication, conditional_drift_sample, delta_moment_estimate,
    fp_step, CoevolveOptions, DensityField, SpatialGrid1D,
};
use crate::metrics::{
    fit_rate, hoeffding_check, sampling_tv_bound, w1_sliced_weighted, Estimate, HoeffdingSample, MetricParams,
    RateFit, RatePoint,
};
use crate::model::{
    brownian_increments, experiment_key, make_grid, DriftSpec, InitialLaw, PathBundle, Purpose, RngStream,
    SimConfig,
};
use crate::simulate::{
    draw_inputs, prepared_vs_limit_gap, reflection_coupling, replicate, run_counterexample_seeded,
    run_with_inputs, sample_limit_case_a, Scheme,
};

use super::config::Params;
use super::report::{Check, RawRow, Row, Rule};

/// What an experiment hands back to the driver.
#[derive(Debug, Default)]
pub struct Outcome {
    pub rows: Vec<Row>,
    pub raw: Vec<RawRow>,
    pub fits: Vec<(String, RateFit)>,
    pub checks: Vec<Check>,
}

impl Outcome {
    fn row(&mut self, series: impl Into<String>, x: f64, value: f64, se: f64) {
        self.rows.push(Row {
            series: series.into(),
            x,
            value,
            se,
        });
    }

    fn est(&mut self, series: impl Into<String>, x: f64, e: Estimate) {
        self.row(series, x, e.mean, e.se);
    }

    fn raw_values(&mut self, n: f64, k: usize, values: &[f64]) {
        self.raw.extend(values.iter().enumerate().map(|(rep, &value)| RawRow {
            n,
            k,
            rep,
            value,
            se: 0.0,
        }));
    }

    fn check(&mut self, criterion: &str, rule: Rule) {
        self.checks.push(Check {
            criterion: criterion.into(),
            rule,
        });
    }
}

pub type RunFn = fn(&Params, u64) -> Result<Outcome>;

pub struct Experiment {
    pub id: &'static str,
    pub name: &'static str,
    pub about: &'static str,
    pub run: RunFn,
}

pub const REGISTRY: &[Experiment] = &[
    Experiment {
        id: "A1",
        name: "lemvitl2_rate",
        about: "flow-map gap between the well-prepared system and the limit, rate in N",
        run: lemvitl2_rate,
    },
    Experiment {
        id: "A2",
        name: "prepared_gap_rate",
        about: "coupled bounded-Lipschitz bound between well-prepared marginals and the limit, rate in N",
        run: prepared_gap_rate,
    },
    Experiment {
        id: "A3",
        name: "girsanov_martingale",
        about: "raw Girsanov weights of the limit sampler average to one",
        run: girsanov_martingale,
    },
    Experiment {
        id: "A4",
        name: "reflection_tail",
        about: "tail and mean of the reflection-coupling merge time",
        run: reflection_tail,
    },
    Experiment {
        id: "A5",
        name: "hoeffding",
        about: "moment bounds for empirical means of bounded conditionally i.i.d. values",
        run: hoeffding,
    },
    Experiment {
        id: "A6",
        name: "delta_rate",
        about: "second moment of the empirical-mean drift gap along co-evolved paths, rate in N",
        run: delta_rate,
    },
    Experiment {
        id: "A7",
        name: "case_b_crossval",
        about: "E[X0_T]: particle system with individual noise against the density co-evolution",
        run: case_b_crossval,
    },
    Experiment {
        id: "A8",
        name: "scheme_identities",
        about: "algebraic identities of the particle schemes on random configurations",
        run: scheme_identities,
    },
    Experiment {
        id: "A9",
        name: "counterexample",
        about: "chattering amplitude of the variance-interaction system and convergence once smoothed",
        run: counterexample,
    },
    Experiment {
        id: "A10",
        name: "natural_monotone",
        about: "natural system approaches the weighted limit as N grows; sampling bound arithmetic",
        run: natural_monotone,
    },
    Experiment {
        id: "A11",
        name: "fp_order",
        about: "refinement ratios, mass and mean of the density solver",
        run: fp_order,
    },
];

pub fn find(name: &str) -> Result<&'static Experiment> {
    REGISTRY.iter().find(|e| e.name == name || e.id == name).ok_or_else(|| Error::UnknownExperiment {
        name: name.to_string(),
        known: REGISTRY.iter().map(|e| e.name).collect::<Vec<_>>().join(", "),
    })
}

fn stream(seed: u64, name: &str) -> RngStream {
    RngStream::new(seed, experiment_key(name))
}

fn fit(points: Vec<RatePoint>, seed: u64, name: &str) -> Result<RateFit> {
    fit_rate(&points, 1000, &stream(seed, name).purpose(Purpose::Bootstrap))
}

fn symmetric_two_point() -> Result<InitialLaw> {
    InitialLaw::two_point(-1.0, 1.0, 0.5)
}

/// Centred law with unequal masses, so that odd drifts do not average out.
fn skewed_two_point() -> Result<InitialLaw> {
    InitialLaw::two_point(-1.0, 2.0, 2.0 / 3.0)
}

fn case_a(n: usize, k: usize, horizon: f64, steps: usize, sigma0: f64, seed: u64) -> Result<SimConfig> {
    let c = SimConfig {
        sigma: 0.0,
        sigma0,
        n_particles: n,
        k,
        grid: make_grid(horizon, steps)?,
        drift: DriftSpec::tanh_gap(1),
        init: symmetric_two_point()?,
        seed,
    };
    c.validate_case_a()?;
    Ok(c)
}

fn case_b(n: usize, horizon: f64, steps: usize, seed: u64) -> Result<SimConfig> {
    let c = SimConfig {
        sigma: 1.0,
        sigma0: 1.0,
        n_particles: n,
        k: 1,
        grid: make_grid(horizon, steps)?,
        drift: DriftSpec::sign_gap(1),
        init: skewed_two_point()?,
        seed,
    };
    c.validate_case_b()?;
    Ok(c)
}

fn need(ok: bool, msg: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        config(msg)
    }
}

fn lemvitl2_rate(p: &Params, seed: u64) -> Result<Outcome> {
    let n_list = p.usize_list("n_list", &[64, 256, 1024, 4096])?;
    let reps = p.usize("reps", 200)?;
    let steps = p.usize("steps", 2048)?;
    let horizon = p.f64("horizon", 1.0)?;
    let sigma0 = p.f64("sigma0", 1.0)?;
    p.finish()?;
    need(n_list.len() >= 3 && n_list.iter().all(|&n| n > 0), "n_list needs three or more positive entries")?;
    need(reps > 0, "reps must be positive")?;
    let cfg = case_a(1, 1, horizon, steps, sigma0, seed)?;
    let s = stream(seed, "lemvitl2_rate");
    let opts = FlowOptions::default();
    // One fixed common path for every replication and every N.
    let bx = PathBundle::from_increments(
        cfg.grid,
        cfg.init.mean(),
        &brownian_increments(&cfg.grid, 1, &s.with(0, 0, Purpose::CommonNoise)),
        sigma0,
    )?;
    let limit = solve_y_field(&cfg.init, &bx, &cfg.drift, opts)?;
    let mut out = Outcome::default();
    let mut points = Vec::new();
    for &n in &n_list {
        let values = replicate(reps, |r| {
            let x = cfg.init.sample(n, &mut s.with(r, 0, Purpose::InitialDraws).rng());
            let y = solve_y_prepared(&x, 1, cfg.init.mean(), &bx, &cfg.drift, opts)?;
            let AtomWeights::Counts { counts, total } = y.weights() else {
                return Err(Error::Numerical("prepared flow without counts".into()));
            };
            let mut acc = 0.0;
            for (g, &c) in counts.iter().enumerate() {
                let oracle = limit.test_particle(&y.atoms()[g..g + 1])?;
                let gap = y.atom_path(g).iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                acc += c as f64 * gap;
            }
            Ok(acc / *total as f64)
        })?;
        out.est("sup_gap", n as f64, Estimate::from_samples(&values));
        out.raw_values(n as f64, 1, &values);
        points.push(RatePoint { n: n as f64, samples: values });
    }
    out.fits.push(("sup_gap".into(), fit(points, seed, "lemvitl2_rate")?));
    out.check("A1", Rule::SlopeIn { series: "sup_gap".into(), lo: -0.65, hi: -0.35 });
    Ok(out)
}

fn prepared_gap_rate(p: &Params, seed: u64) -> Result<Outcome> {
    let n_list = p.usize_list("n_list", &[64, 128, 256, 512, 1024, 2048, 4096])?;
    let reps = p.usize("reps", 10_000)?;
    let steps = p.usize("steps", 256)?;
    let horizon = p.f64("horizon", 1.0)?;
    let k = p.usize("k", 1)?;
    let m_bl = p.f64("m_bl", 1.0)?;
    p.finish()?;
    need(n_list.len() >= 3, "n_list needs three or more entries")?;
    need(reps > 0 && m_bl > 0.0, "reps and m_bl must be positive")?;
    let configs = n_list
        .iter()
        .map(|&n| case_a(n, k, horizon, steps, 1.0, seed))
        .collect::<Result<Vec<_>>>()?;
    let s = stream(seed, "prepared_gap_rate");
    let mut out = Outcome::default();
    let mut points = Vec::new();
    for cfg in &configs {
        let g = prepared_vs_limit_gap(cfg, k, m_bl, reps, &s)?;
        let values: Vec<f64> = g.samples.iter().map(|x| x.value).collect();
        out.est("gap", g.n as f64, g.estimate);
        out.raw_values(g.n as f64, k, &values);
        points.push(RatePoint { n: g.n as f64, samples: values });
    }
    out.fits.push(("gap".into(), fit(points, seed, "prepared_gap_rate")?));
    out.check("A2", Rule::SlopeIn { series: "gap".into(), lo: -0.65, hi: -0.35 });
    Ok(out)
}

fn girsanov_martingale(p: &Params, seed: u64) -> Result<Outcome> {
    let reps = p.usize("reps", 10_000)?;
    let steps = p.usize("steps", 256)?;
    let horizon = p.f64("horizon", 1.0)?;
    p.finish()?;
    need(reps > 1, "reps must exceed one")?;
    let mut cfg = case_a(1, 1, horizon, steps, 1.0, seed)?;
    // A symmetric start makes the mean drift vanish and every weight equal one.
    cfg.init = skewed_two_point()?;
    let load = horizon * cfg.drift.bound().powi(2) / cfg.sigma0.powi(2);
    need(load <= 1.0, "weight variance control requires T |b|^2 <= 1")?;
    let e = sample_limit_case_a(&cfg, 1, reps, &stream(seed, "girsanov_martingale"))?;
    let mut out = Outcome::default();
    let w = e.weights();
    out.est("raw_weight_mean", horizon, e.raw_weight_mean());
    let terminal: Vec<f64> = (0..reps).map(|r| e.x0.terminal(r)[0]).collect();
    out.est("weighted_mean_x0T", horizon, e.weighted_mean(&terminal));
    out.raw_values(horizon, 1, &w);
    out.check("A3", Rule::NearTarget { series: "raw_weight_mean".into(), target: 1.0, k: 4.0 });
    Ok(out)
}

fn reflection_tail(p: &Params, seed: u64) -> Result<Outcome> {
    let h_list = p.f64_list("h_list", &[0.1, 0.5, 1.0])?;
    let reps = p.usize("reps", 100_000)?;
    let steps = p.usize("steps", 128)?;
    let horizon = p.f64("horizon", 1.0)?;
    p.finish()?;
    need(!h_list.is_empty() && h_list.iter().all(|&h| h > 0.0), "h_list needs positive gaps")?;
    need(reps > 1, "reps must exceed one")?;
    let grid = make_grid(horizon, steps)?;
    let s = stream(seed, "reflection_tail");
    let mut out = Outcome::default();
    for &h in &h_list {
        let res = reflection_coupling(h, &grid, reps, &s, false)?;
        let taus: Vec<f64> = res.iter().map(|r| r.tau).collect();
        let (tail, bound) = (format!("tail_h{h}"), format!("tail_bound_h{h}"));
        for m in 1..=steps {
            let t = grid.time(m);
            let p_hat = taus.iter().filter(|&&x| x >= t).count() as f64 / reps as f64;
            out.row(&tail, t, p_hat, (p_hat * (1.0 - p_hat) / reps as f64).sqrt());
            out.row(&bound, t, (2.0 * h / (2.0 * std::f64::consts::PI * t).sqrt()).min(1.0), 0.0);
        }
        let unmerged = res.iter().filter(|r| !r.merged).count() as f64 / reps as f64;
        out.row("p_unmerged", h, unmerged, (unmerged * (1.0 - unmerged) / reps as f64).sqrt());
        let e = Estimate::from_samples(&taus);
        out.est("mean_tau", h, e);
        out.row("mean_tau_over_h", h, e.mean / h, e.se / h);
        out.raw_values(h, 1, &taus);
        out.check("A4", Rule::BelowSeries { series: tail, bound, k: 4.0 });
    }
    out.check("A4", Rule::Spread { series: "mean_tau_over_h".into(), max_spread: 0.5 });
    Ok(out)
}

fn hoeffding(p: &Params, seed: u64) -> Result<Outcome> {
    let n_list = p.usize_list("n_list", &[100, 1000])?;
    let reps_rademacher = p.usize("reps_rademacher", 10_000)?;
    let reps_copies = p.usize("reps_copies", 400)?;
    let steps = p.usize("steps", 64)?;
    let dy = p.f64("dy", 0.1)?;
    p.finish()?;
    need(!n_list.is_empty() && n_list.iter().all(|&n| n > 0), "n_list needs positive entries")?;
    need(reps_rademacher > 1 && reps_copies > 1, "replication counts must exceed one")?;
    let cfg = case_b(1, 1.0, steps, seed)?;
    let opts = CoevolveOptions { dy, ..Default::default() };
    let s = stream(seed, "hoeffding");
    let n_max = *n_list.iter().max().unwrap_or(&1);
    let mut out = Outcome::default();

    let rademacher = replicate(reps_rademacher, |r| {
        let mut rng = s.with(r, 0, Purpose::Other(1)).rng();
        let values: Vec<f64> = (0..n_max).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
        Ok(HoeffdingSample { values, center: vec![0.0] })
    })?;
    let copies = replicate(reps_copies, |r| {
        let path = coevolve_replication(&cfg, &opts, &s, r)?;
        conditional_drift_sample(&cfg, &path, n_max, steps, &s, r)
    })?;
    for (family, samples) in [("rademacher", &rademacher), ("copies", &copies)] {
        for &n in &n_list {
            let prefix: Vec<HoeffdingSample> = samples
                .iter()
                .map(|h| HoeffdingSample { values: h.values[..n].to_vec(), center: h.center.clone() })
                .collect();
            for q in [1u32, 2] {
                let v = hoeffding_check(&prefix, 1, 1.0, q)?;
                let name = format!("{family}_q{q}");
                out.est(&name, n as f64, v.estimate);
                out.row(format!("{name}_bound"), n as f64, v.bound, 0.0);
            }
        }
        for q in [1, 2] {
            let name = format!("{family}_q{q}");
            out.check("A5", Rule::BelowSeries { series: name.clone(), bound: format!("{name}_bound"), k: 4.0 });
        }
    }
    Ok(out)
}

fn delta_rate(p: &Params, seed: u64) -> Result<Outcome> {
    let n_list = p.usize_list("n_list", &[100, 300, 1000])?;
    let reps = p.usize("reps", 400)?;
    let steps = p.usize("steps", 128)?;
    let dy = p.f64("dy", 0.05)?;
    p.finish()?;
    need(n_list.len() >= 2, "n_list needs two or more entries")?;
    let cfg = case_b(1, 1.0, steps, seed)?;
    let opts = CoevolveOptions { dy, ..Default::default() };
    let stats = delta_moment_estimate(&cfg, &n_list, reps, &stream(seed, "delta_rate"), &opts)?;
    let mut out = Outcome::default();
    let mut points = Vec::new();
    for st in stats {
        let n = st.n as f64;
        out.est("delta_q1", n, st.q1);
        out.row("delta_q1_bound", n, st.bound_q1, 0.0);
        out.est("delta_q2", n, st.q2);
        out.row("delta_q2_bound", n, st.bound_q2, 0.0);
        out.raw_values(n, 1, &st.values);
        points.push(RatePoint { n, samples: st.values });
    }
    if points.len() >= 3 {
        out.fits.push(("delta_q1".into(), fit(points, seed, "delta_rate")?));
    }
    out.check("A6", Rule::SlopeIn { series: "delta_q1".into(), lo: -1.15, hi: -0.85 });
    out.check("A6", Rule::BelowSeries { series: "delta_q1".into(), bound: "delta_q1_bound".into(), k: 4.0 });
    out.check("A6", Rule::BelowSeries { series: "delta_q2".into(), bound: "delta_q2_bound".into(), k: 4.0 });
    Ok(out)
}

fn case_b_crossval(p: &Params, seed: u64) -> Result<Outcome> {
    let n = p.usize("n", 4096)?;
    let particle_reps = p.usize("particle_reps", 400)?;
    let limit_reps = p.usize("limit_reps", 10_000)?;
    let steps = p.usize("steps", 64)?;
    let dy = p.f64("dy", 0.1)?;
    p.finish()?;
    need(particle_reps > 1 && limit_reps > 1, "replication counts must exceed one")?;
    let cfg = case_b(n, 1.0, steps, seed)?;
    let opts = CoevolveOptions { dy, ..Default::default() };
    let sp = stream(seed, "case_b_crossval/particles");
    let particles = replicate(particle_reps, |r| {
        let inputs = draw_inputs(&cfg, Scheme::CaseB, &sp, r)?;
        Ok(run_with_inputs(&cfg, Scheme::CaseB, inputs)?.x0_path.terminal(0)[0])
    })?;
    let limit: Vec<f64> = coevolve_limit_b(&cfg, limit_reps, &stream(seed, "case_b_crossval/limit"), &opts)?
        .iter()
        .map(|c| c.x0[steps])
        .collect();
    let mut out = Outcome::default();
    out.est("particle_x0T", n as f64, Estimate::from_samples(&particles));
    out.est("limit_x0T", n as f64, Estimate::from_samples(&limit));
    out.raw_values(n as f64, 0, &particles);
    out.check("A7", Rule::Agree { a: "particle_x0T".into(), b: "limit_x0T".into(), k: 4.0 });
    Ok(out)
}

/// A random configuration for the identity checks.
fn random_config(s: &RngStream, i: u64, seed: u64) -> Result<(SimConfig, SimConfig)> {
    let mut rng = s.with(i, 0, Purpose::Configs).rng();
    let d = rng.random_range(1..=3usize);
    let n = rng.random_range(1..=200usize);
    let steps = rng.random_range(1..=100usize);
    let horizon = rng.random_range(0.1..3.0);
    let sigma0 = rng.random_range(0.1..2.0);
    let sigma = rng.random_range(0.1..2.0);
    let mean: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
    let init = match rng.random_range(0..3) {
        0 => {
            let mut cov = vec![0.0; d * d];
            for c in 0..d {
                cov[c * d + c] = rng.random_range(0.01..4.0);
            }
            InitialLaw::gaussian(mean, cov)?
        }
        1 => {
            let atoms = rng.random_range(1..=5usize);
            let pts: Vec<f64> = (0..atoms * d).map(|_| rng.random_range(-3.0..3.0)).collect();
            let w: Vec<f64> = (0..atoms).map(|_| rng.random_range(0.1..1.0)).collect();
            let tot: f64 = w.iter().sum();
            InitialLaw::atoms(d, pts, w.iter().map(|x| x / tot).collect())?
        }
        _ => {
            let pts: Vec<f64> = (0..2 * d).map(|_| rng.random_range(-3.0..3.0)).collect();
            InitialLaw::uniform_atoms(d, pts)?
        }
    };
    let smooth = match rng.random_range(0..4) {
        0 => DriftSpec::zero(d),
        1 => DriftSpec::constant((0..d).map(|_| rng.random_range(-1.0..1.0)).collect()),
        2 => DriftSpec::tanh_gap(d),
        _ => DriftSpec::tanh_of_mean(d),
    };
    let rough = if rng.random::<bool>() { DriftSpec::sign_gap(d) } else { smooth.clone() };
    let grid = make_grid(horizon, steps)?;
    let a = SimConfig { sigma: 0.0, sigma0, n_particles: n, k: 1, grid, drift: smooth, init: init.clone(), seed };
    let b = SimConfig { sigma, sigma0, n_particles: n, k: 1, grid, drift: rough, init, seed };
    Ok((a, b))
}

fn scheme_identities(p: &Params, seed: u64) -> Result<Outcome> {
    let configs = p.usize("configs", 100)?;
    p.finish()?;
    need(configs > 0, "configs must be positive")?;
    let s = stream(seed, "scheme_identities");
    let defects = replicate(configs, |i| {
        let (a, b) = random_config(&s, i, seed)?;
        let run = |cfg: &SimConfig, scheme| -> Result<f64> {
            let inputs = draw_inputs(cfg, scheme, &s, i)?;
            Ok(run_with_inputs(cfg, scheme, inputs)?.identity_defect())
        };
        Ok([run(&a, Scheme::Natural)?, run(&a, Scheme::Prepared)?, run(&b, Scheme::CaseB)?])
    })?;
    let mut out = Outcome::default();
    for (j, name) in ["natural_defect", "prepared_defect", "case_b_defect"].iter().enumerate() {
        for (i, d) in defects.iter().enumerate() {
            out.row(*name, i as f64, d[j], 0.0);
        }
        out.check("A8", Rule::AtMost { series: name.to_string(), max: 1e-12 });
    }
    Ok(out)
}

fn counterexample(p: &Params, seed: u64) -> Result<Outcome> {
    let coarsest = p.usize("coarsest_level", 6)?;
    let finest = p.usize("finest_level", 12)?;
    let eps = p.f64("eps", 0.1)?;
    p.finish()?;
    need(coarsest >= 1 && finest > coarsest + 1 && finest <= 20, "need 1 <= coarsest_level < finest_level - 1 <= 19")?;
    need(eps > 0.0, "eps must be positive")?;
    let s = stream(seed, "counterexample");
    let noise_steps = 1usize << (finest + 1);
    let mut out = Outcome::default();
    let mut amps = Vec::new();
    let mut smooth = Vec::new();
    for level in coarsest..=finest + 1 {
        let grid = make_grid(1.0, 1 << level)?;
        if level <= finest {
            let r = run_counterexample_seeded(0.0, &grid, noise_steps, &s)?;
            out.row("amplitude", grid.dt(), r.amplitude, 0.0);
            out.raw.push(RawRow { n: grid.dt(), k: 2, rep: 0, value: r.amplitude, se: 0.0 });
            amps.push((grid.dt(), r.amplitude));
        }
        smooth.push((grid.dt(), run_counterexample_seeded(eps, &grid, noise_steps, &s)?.d));
    }
    for w in amps.windows(2) {
        out.row("amplitude_ratio", w[0].0, w[0].1 / w[1].1, 0.0);
    }
    for w in smooth.windows(2) {
        let (coarse, fine) = (&w[0].1, &w[1].1);
        let sup = coarse.iter().enumerate().map(|(m, v)| (v - fine[2 * m]).abs()).fold(0.0, f64::max);
        out.row("smoothed_cauchy", w[0].0, sup, 0.0);
    }
    out.check("A9", Rule::SlopeIn { series: "amplitude".into(), lo: 0.9, hi: 1.1 });
    out.check("A9", Rule::NonIncreasing { series: "smoothed_cauchy".into(), k: 0.0 });
    Ok(out)
}

fn natural_monotone(p: &Params, seed: u64) -> Result<Outcome> {
    let n_list = p.usize_list("n_list", &[64, 256, 1024])?;
    let particle_reps = p.usize("particle_reps", 10_000)?;
    let limit_reps = p.usize("limit_reps", 40_000)?;
    let steps = p.usize("steps", 64)?;
    let slices = p.usize("slices", 16)?;
    let boot = p.usize("bootstrap", 20)?;
    let tv_pairs = p.usize("tv_pairs", 10_000)?;
    p.finish()?;
    need(n_list.len() >= 2 && boot > 1, "need two or more N values and bootstrap > 1")?;
    let configs = n_list
        .iter()
        .map(|&n| {
            let mut c = case_a(n, 1, 1.0, steps, 1.0, seed)?;
            c.init = skewed_two_point()?;
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    let params = MetricParams { slices, ..Default::default() };
    params.validate()?;
    let s = stream(seed, "natural_monotone");
    let limit = sample_limit_case_a(&configs[0], 1, limit_reps, &stream(seed, "natural_monotone/limit"))?;
    let lw = limit.weights();
    let lpts: Vec<f64> = (0..limit_reps)
        .flat_map(|r| [limit.x0.terminal(r)[0], limit.particles.terminal(r)[0]])
        .collect();
    let mut out = Outcome::default();
    for cfg in &configs {
        let pts: Vec<f64> = replicate(particle_reps, |r| {
            let inputs = draw_inputs(cfg, Scheme::Natural, &s, r)?;
            let run = run_with_inputs(cfg, Scheme::Natural, inputs)?;
            Ok([run.x0_path.terminal(0)[0], run.particles.point(0, steps)[0]])
        })?
        .into_iter()
        .flatten()
        .collect();
        let value = w1_sliced_weighted(&pts, &lpts, &lw, 2, &params)?.estimate.mean;
        let boots = replicate(boot, |b| {
            let mut rng = s.with(b, cfg.n_particles as u64, Purpose::Bootstrap).rng();
            let mut a = Vec::with_capacity(pts.len());
            for _ in 0..particle_reps {
                let j = rng.random_range(0..particle_reps);
                a.extend_from_slice(&pts[2 * j..2 * j + 2]);
            }
            let mut bp = Vec::with_capacity(lpts.len());
            let mut bw = Vec::with_capacity(limit_reps);
            for _ in 0..limit_reps {
                let j = rng.random_range(0..limit_reps);
                bp.extend_from_slice(&lpts[2 * j..2 * j + 2]);
                bw.push(lw[j]);
            }
            Ok(w1_sliced_weighted(&a, &bp, &bw, 2, &params)?.estimate.mean)
        })?;
        let se = Estimate::from_samples(&boots).se * (boot as f64).sqrt();
        out.row("sliced_w1", cfg.n_particles as f64, value, se);
        out.raw.extend(boots.iter().enumerate().map(|(rep, &v)| RawRow {
            n: cfg.n_particles as f64,
            k: 1,
            rep,
            value: v,
            se: 0.0,
        }));
    }
    let mut rng = s.with(0, 0, Purpose::Other(2)).rng();
    let mut violations = 0usize;
    for _ in 0..tv_pairs {
        let n: u64 = rng.random_range(1..=1_000_000);
        let k: u64 = rng.random_range(1..=n);
        let (exact, bound) = sampling_tv_bound(n, k)?;
        if exact > bound {
            violations += 1;
        }
    }
    out.row("sampling_tv_violations", tv_pairs as f64, violations as f64, 0.0);
    out.check("A10", Rule::NonIncreasing { series: "sliced_w1".into(), k: 2.0 });
    out.check("A10", Rule::AtMost { series: "sampling_tv_violations".into(), max: 0.0 });
    Ok(out)
}

/// Terminal density of the solver with `X⁰ ≡ x0` on a grid of spacing `dy`.
pub fn fp_terminal(drift: &DriftSpec, atoms: &[f64], x0: f64, half_width: f64, dy: f64, horizon: f64, cfl: f64) -> Result<DensityField> {
    let grid = SpatialGrid1D::with_spacing(half_width, dy)?;
    let w = vec![1.0 / atoms.len() as f64; atoms.len()];
    let mut d = DensityField::from_atoms(grid, atoms, &w)?;
    let steps = (horizon / (cfl * admissible_dt(&grid, 1.0, drift.bound()))).ceil() as usize;
    let dt = horizon / steps as f64;
    for _ in 0..steps {
        d = fp_step(&d, x0, drift, 1.0, dt)?;
    }
    Ok(d)
}

fn fp_order(p: &Params, _seed: u64) -> Result<Outcome> {
    let dy_list = p.f64_list("dy_list", &[0.2, 0.1, 0.05, 0.025])?;
    let half_width = p.f64("half_width", 8.0)?;
    let horizon = p.f64("horizon", 1.0)?;
    p.finish()?;
    need(dy_list.len() >= 3, "dy_list needs three or more levels")?;
    need(
        dy_list.windows(2).all(|w| (w[0] / w[1] - 2.0).abs() < 1e-12),
        "dy_list must halve from one level to the next",
    )?;
    let drift = DriftSpec::tanh_gap(1);
    let levels = dy_list
        .iter()
        .map(|&dy| fp_terminal(&drift, &[-1.0, 1.0], 0.0, half_width, dy, horizon, 0.9))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Outcome::default();
    let mut incs = Vec::new();
    for (i, d) in levels.iter().enumerate() {
        out.row("mass_error", dy_list[i], (d.mass() - 1.0).abs(), 0.0);
        out.row("mean_error", dy_list[i], d.mean().abs(), 0.0);
        if i + 1 < levels.len() {
            let e = d.l1_distance(&levels[i + 1].coarsen(2)?)?;
            out.row("l1_increment", dy_list[i], e, 0.0);
            incs.push(e);
        }
    }
    for (i, w) in incs.windows(2).enumerate() {
        out.row("richardson_ratio", dy_list[i], w[0] / w[1], 0.0);
    }
    out.check("A11", Rule::InRange { series: "richardson_ratio".into(), lo: 1.6, hi: 4.4 });
    out.check("A11", Rule::AtMost { series: "mass_error".into(), max: 1e-8 });
    out.check("A11", Rule::AtMost { series: "mean_error".into(), max: 1e-6 });
    Ok(out)
}
