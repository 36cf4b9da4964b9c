//! Experiment files, the experiment registry, report formats and the
//! command-line driver.

mod config;
mod experiments;
mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{ExperimentConfig, Params};
pub use experiments::{find, fp_terminal, Experiment, Outcome, RunFn, REGISTRY};
pub use report::{emit_report, evaluate, judge, verify, Check, Format, RawRow, Report, Row, Rule, Verdict, VerifyOutcome};

use crate::error::{Error, Result};

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Runs one experiment in memory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    let exp = find(&cfg.experiment)?;
    let params = Params::new(&cfg.params);
    let start = Instant::now();
    let outcome = match cfg.workers {
        Some(0) => return crate::error::config("workers must be positive"),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {w} workers: {e}")))?
            .install(|| (exp.run)(&params, cfg.seed))?,
        None => (exp.run)(&params, cfg.seed)?,
    };
    let verdicts = judge(&outcome.checks, &outcome.rows);
    Ok(Report {
        experiment: exp.name.to_string(),
        id: exp.id.to_string(),
        seed: cfg.seed,
        config: params.echo(),
        rows: outcome.rows,
        raw: outcome.raw,
        fits: outcome.fits,
        checks: outcome.checks,
        verdicts,
        wall_clock_s: start.elapsed().as_secs_f64(),
    })
}

/// Runs an experiment and writes every output format to `<out>/<experiment>/`.
/// Outputs are staged in a sibling directory and moved into place only once
/// all of them are written.
pub fn execute(cfg: &ExperimentConfig) -> Result<(Report, PathBuf)> {
    let exp = find(&cfg.experiment)?;
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let report = run_experiment(cfg)?;
    fs::create_dir_all(&out).map_err(io(&out))?;
    let dest = out.join(exp.name);
    let partial = out.join(format!("{}.partial", exp.name));
    if partial.exists() {
        fs::remove_dir_all(&partial).map_err(io(&partial))?;
    }
    fs::create_dir_all(&partial).map_err(io(&partial))?;
    let written = [Format::Summary, Format::Csv, Format::PlotData, Format::Json]
        .into_iter()
        .try_for_each(|f| emit_report(&report, f, &partial));
    if let Err(e) = written {
        let _ = fs::remove_dir_all(&partial);
        return Err(e);
    }
    if dest.exists() {
        fs::remove_dir_all(&dest).map_err(io(&dest))?;
    }
    fs::rename(&partial, &dest).map_err(io(&dest))?;
    Ok((report, dest))
}

/// One line per registered experiment.
pub fn list() -> String {
    REGISTRY
        .iter()
        .map(|e| format!("{:<4} {:<20} {}\n", e.id, e.name, e.about))
        .collect()
}
