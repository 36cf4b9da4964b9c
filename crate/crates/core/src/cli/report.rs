use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{fit_loglog, RateFit};

/// One table entry: the value of `series` at abscissa `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub series: String,
    pub x: f64,
    pub value: f64,
    pub se: f64,
}

/// One replication-level value, written to the raw CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRow {
    pub n: f64,
    pub k: usize,
    pub rep: usize,
    pub value: f64,
    pub se: f64,
}

/// A check that can be re-evaluated from the table alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Rule {
    /// Least-squares slope of `ln value` against `ln x` lies in `[lo, hi]`.
    SlopeIn { series: String, lo: f64, hi: f64 },
    /// `value ≤ bound + k se` at every `x`, the bound read from another series.
    BelowSeries { series: String, bound: String, k: f64 },
    /// `|value - target| ≤ k se` for every row.
    NearTarget { series: String, target: f64, k: f64 },
    /// `|a - b| ≤ k sqrt(se_a² + se_b²)` at every common `x`.
    Agree { a: String, b: String, k: f64 },
    /// `value ≤ max` for every row.
    AtMost { series: String, max: f64 },
    /// Every value in `[lo, hi]`.
    InRange { series: String, lo: f64, hi: f64 },
    /// Values never increase along the rows by more than `k` combined SE.
    NonIncreasing { series: String, k: f64 },
    /// `max / min - 1 < max_spread` over the series.
    Spread { series: String, max_spread: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub criterion: String,
    pub rule: Rule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub criterion: String,
    pub pass: bool,
    pub details: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub experiment: String,
    pub id: String,
    pub seed: u64,
    /// Parameters as run, in TOML.
    pub config: String,
    pub rows: Vec<Row>,
    pub raw: Vec<RawRow>,
    pub fits: Vec<(String, RateFit)>,
    pub checks: Vec<Check>,
    pub verdicts: Vec<Verdict>,
    pub wall_clock_s: f64,
}

fn series<'a>(rows: &'a [Row], name: &str) -> Vec<&'a Row> {
    rows.iter().filter(|r| r.series == name).collect()
}

/// Evaluates a rule; returns pass flag and a one-line explanation.
pub fn evaluate(rule: &Rule, rows: &[Row]) -> (bool, String) {
    match rule {
        Rule::SlopeIn { series: s, lo, hi } => {
            let pts = series(rows, s);
            if pts.len() < 2 || pts.iter().any(|r| !(r.x > 0.0 && r.value > 0.0)) {
                return (false, format!("{s}: need two or more positive points"));
            }
            let xs: Vec<f64> = pts.iter().map(|r| r.x.ln()).collect();
            let ys: Vec<f64> = pts.iter().map(|r| r.value.ln()).collect();
            let (slope, _) = fit_loglog(&xs, &ys);
            (slope >= *lo && slope <= *hi, format!("{s}: slope {slope:.4} in [{lo}, {hi}]"))
        }
        Rule::BelowSeries { series: s, bound, k } => {
            let pts = series(rows, s);
            let bs = series(rows, bound);
            if pts.is_empty() {
                return (false, format!("{s}: no rows"));
            }
            let mut worst = f64::INFINITY;
            for p in &pts {
                let Some(b) = bs.iter().find(|b| b.x == p.x) else {
                    return (false, format!("{s}: no bound at x = {}", p.x));
                };
                worst = worst.min(b.value + k * p.se - p.value);
            }
            (worst >= 0.0, format!("{s} <= {bound} + {k} SE: smallest margin {worst:.4e}"))
        }
        Rule::NearTarget { series: s, target, k } => {
            let pts = series(rows, s);
            let worst = pts
                .iter()
                .map(|r| (r.value - target).abs() / r.se.max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max);
            (!pts.is_empty() && worst <= *k, format!("{s}: largest |value - {target}| = {worst:.3} SE (limit {k})"))
        }
        Rule::Agree { a, b, k } => {
            let pa = series(rows, a);
            let pb = series(rows, b);
            let mut worst: f64 = 0.0;
            let mut matched = 0;
            for p in &pa {
                if let Some(q) = pb.iter().find(|q| q.x == p.x) {
                    matched += 1;
                    let se = (p.se * p.se + q.se * q.se).sqrt().max(f64::MIN_POSITIVE);
                    worst = worst.max((p.value - q.value).abs() / se);
                }
            }
            (matched > 0 && worst <= *k, format!("{a} vs {b}: largest gap {worst:.3} combined SE (limit {k})"))
        }
        Rule::AtMost { series: s, max } => {
            let pts = series(rows, s);
            let top = pts.iter().map(|r| r.value).fold(f64::NEG_INFINITY, f64::max);
            (!pts.is_empty() && top <= *max, format!("{s}: largest value {top:.4e} (limit {max:e})"))
        }
        Rule::InRange { series: s, lo, hi } => {
            let pts = series(rows, s);
            let ok = !pts.is_empty() && pts.iter().all(|r| r.value >= *lo && r.value <= *hi);
            let vals: Vec<String> = pts.iter().map(|r| format!("{:.3}", r.value)).collect();
            (ok, format!("{s}: values [{}] in [{lo}, {hi}]", vals.join(", ")))
        }
        Rule::NonIncreasing { series: s, k } => {
            let pts = series(rows, s);
            let mut worst = f64::NEG_INFINITY;
            for w in pts.windows(2) {
                let se = (w[0].se * w[0].se + w[1].se * w[1].se).sqrt();
                worst = worst.max(w[1].value - w[0].value - k * se);
            }
            (pts.len() >= 2 && worst <= 0.0, format!("{s}: largest increase beyond {k} SE {worst:.4e}"))
        }
        Rule::Spread { series: s, max_spread } => {
            let pts = series(rows, s);
            let hi = pts.iter().map(|r| r.value).fold(f64::NEG_INFINITY, f64::max);
            let lo = pts.iter().map(|r| r.value).fold(f64::INFINITY, f64::min);
            let spread = hi / lo - 1.0;
            (!pts.is_empty() && lo > 0.0 && spread < *max_spread, format!("{s}: max/min - 1 = {spread:.4} (limit {max_spread})"))
        }
    }
}

/// Verdicts per criterion, in order of first appearance among the checks.
pub fn judge(checks: &[Check], rows: &[Row]) -> Vec<Verdict> {
    let mut out: Vec<Verdict> = Vec::new();
    for c in checks {
        let (pass, detail) = evaluate(&c.rule, rows);
        match out.iter_mut().find(|v| v.criterion == c.criterion) {
            Some(v) => {
                v.pass &= pass;
                v.details.push(detail);
            }
            None => out.push(Verdict {
                criterion: c.criterion.clone(),
                pass,
                details: vec![detail],
            }),
        }
    }
    out
}

impl Report {
    pub fn all_pass(&self) -> bool {
        !self.verdicts.is_empty() && self.verdicts.iter().all(|v| v.pass)
    }

    /// The summary without its timing section; stable for a fixed seed.
    pub fn summary_body(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "experiment: {} ({})", self.experiment, self.id);
        let _ = writeln!(s, "seed: {}", self.seed);
        let _ = writeln!(s, "\n[config]");
        s.push_str(&self.config);
        if !self.config.ends_with('\n') {
            s.push('\n');
        }
        let _ = writeln!(s, "\n[results]");
        let _ = writeln!(s, "series x value se");
        for r in &self.rows {
            let _ = writeln!(s, "{} {} {} {}", r.series, r.x, r.value, r.se);
        }
        if !self.fits.is_empty() {
            let _ = writeln!(s, "\n[fits]");
            let _ = writeln!(s, "series slope intercept ci_lo ci_hi");
            for (name, f) in &self.fits {
                let _ = writeln!(s, "{} {} {} {} {}", name, f.slope, f.intercept, f.ci.0, f.ci.1);
            }
        }
        let _ = writeln!(s, "\n[verdicts]");
        for v in &self.verdicts {
            let _ = writeln!(s, "{}: {}", if v.pass { "PASS" } else { "FAIL" }, v.criterion);
            for d in &v.details {
                let _ = writeln!(s, "  {d}");
            }
        }
        s
    }

    pub fn summary(&self) -> String {
        let mut s = self.summary_body();
        let _ = writeln!(s, "\n[timing]");
        let _ = writeln!(s, "wall_clock_s: {:.3}", self.wall_clock_s);
        s
    }

    pub fn csv(&self) -> String {
        let mut s = String::from("experiment,N,k,rep,value,se\n");
        for r in &self.raw {
            let _ = writeln!(s, "{},{},{},{},{},{}", self.experiment, r.n, r.k, r.rep, r.value, r.se);
        }
        s
    }

    /// Series names in order of first appearance.
    pub fn series_names(&self) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        for r in &self.rows {
            if !names.contains(&r.series) {
                names.push(r.series.clone());
            }
        }
        names
    }

    /// Gnuplot-ready `x y yerr` lines for one series.
    pub fn plot_data(&self, series: &str) -> String {
        let mut s = format!("# {} {}\n# x y yerr\n", self.experiment, series);
        for r in self.rows.iter().filter(|r| r.series == series) {
            let _ = writeln!(s, "{} {} {}", r.x, r.value, r.se);
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Summary,
    Csv,
    PlotData,
    Json,
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes one output format into `dir`: `summary.txt`, `raw.csv`,
/// `plot_<series>.dat` files or `report.json`.
pub fn emit_report(report: &Report, format: Format, dir: &Path) -> Result<()> {
    match format {
        Format::Summary => write(&dir.join("summary.txt"), &report.summary()),
        Format::Csv => write(&dir.join("raw.csv"), &report.csv()),
        Format::PlotData => {
            for name in report.series_names() {
                write(&dir.join(format!("plot_{name}.dat")), &report.plot_data(&name))?;
            }
            Ok(())
        }
        Format::Json => {
            let json = serde_json::to_string_pretty(report).map_err(|e| Error::Parse(e.to_string()))?;
            write(&dir.join("report.json"), &json)
        }
    }
}

/// Outcome of re-checking a stored report.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOutcome {
    pub verdicts: Vec<Verdict>,
    /// Stored verdicts agree with the recomputed ones.
    pub consistent: bool,
}

impl VerifyOutcome {
    pub fn all_pass(&self) -> bool {
        self.consistent && !self.verdicts.is_empty() && self.verdicts.iter().all(|v| v.pass)
    }
}

/// Re-evaluates the verdicts of a report from its table. Accepts the report
/// directory or its `report.json`.
pub fn verify(path: &Path) -> Result<VerifyOutcome> {
    let file = if path.is_dir() { path.join("report.json") } else { path.to_path_buf() };
    let text = fs::read_to_string(&file).map_err(|source| Error::Io {
        path: file.display().to_string(),
        source,
    })?;
    let report: Report = serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", file.display())))?;
    let verdicts = judge(&report.checks, &report.rows);
    let consistent = verdicts.len() == report.verdicts.len()
        && verdicts
            .iter()
            .zip(&report.verdicts)
            .all(|(a, b)| a.criterion == b.criterion && a.pass == b.pass);
    Ok(VerifyOutcome { verdicts, consistent })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(series: &str, x: f64, value: f64, se: f64) -> Row {
        Row {
            series: series.into(),
            x,
            value,
            se,
        }
    }

    #[test]
    fn slope_rule() {
        let rows: Vec<Row> = [64.0, 256.0, 1024.0].iter().map(|&n| row("e", n, 1.0 / f64::sqrt(n), 0.0)).collect();
        assert!(evaluate(&Rule::SlopeIn { series: "e".into(), lo: -0.51, hi: -0.49 }, &rows).0);
        assert!(!evaluate(&Rule::SlopeIn { series: "e".into(), lo: -0.4, hi: 0.0 }, &rows).0);
    }

    #[test]
    fn bound_and_agreement_rules() {
        let rows = vec![
            row("est", 1.0, 0.5, 0.1),
            row("bnd", 1.0, 0.2, 0.0),
            row("est", 2.0, 0.1, 0.1),
            row("bnd", 2.0, 0.2, 0.0),
        ];
        let below = Rule::BelowSeries { series: "est".into(), bound: "bnd".into(), k: 4.0 };
        assert!(evaluate(&below, &rows).0);
        let strict = Rule::BelowSeries { series: "est".into(), bound: "bnd".into(), k: 2.0 };
        assert!(!evaluate(&strict, &rows).0);
        assert!(evaluate(&Rule::Agree { a: "est".into(), b: "bnd".into(), k: 3.0 }, &rows).0);
        assert!(!evaluate(&Rule::Agree { a: "est".into(), b: "bnd".into(), k: 2.0 }, &rows).0);
    }

    #[test]
    fn shape_rules() {
        let rows = vec![row("s", 1.0, 1.0, 0.1), row("s", 2.0, 1.1, 0.1), row("s", 3.0, 0.5, 0.1)];
        assert!(evaluate(&Rule::NonIncreasing { series: "s".into(), k: 1.0 }, &rows).0);
        assert!(!evaluate(&Rule::NonIncreasing { series: "s".into(), k: 0.5 }, &rows).0);
        assert!(evaluate(&Rule::Spread { series: "s".into(), max_spread: 1.3 }, &rows).0);
        assert!(!evaluate(&Rule::Spread { series: "s".into(), max_spread: 1.0 }, &rows).0);
        assert!(evaluate(&Rule::InRange { series: "s".into(), lo: 0.5, hi: 1.1 }, &rows).0);
        assert!(evaluate(&Rule::AtMost { series: "s".into(), max: 1.1 }, &rows).0);
        assert!(!evaluate(&Rule::AtMost { series: "missing".into(), max: 1.0 }, &rows).0);
        assert!(evaluate(&Rule::NearTarget { series: "s".into(), target: 0.8, k: 3.5 }, &rows).0);
        assert!(!evaluate(&Rule::NearTarget { series: "s".into(), target: 0.8, k: 2.0 }, &rows).0);
    }

    #[test]
    fn judge_groups_by_criterion() {
        let rows = vec![row("a", 1.0, 1.0, 0.0)];
        let checks = vec![
            Check { criterion: "A1".into(), rule: Rule::AtMost { series: "a".into(), max: 2.0 } },
            Check { criterion: "A1".into(), rule: Rule::AtMost { series: "a".into(), max: 0.5 } },
            Check { criterion: "A2".into(), rule: Rule::AtMost { series: "a".into(), max: 2.0 } },
        ];
        let v = judge(&checks, &rows);
        assert_eq!(v.len(), 2);
        assert!(!v[0].pass && v[0].details.len() == 2);
        assert!(v[1].pass);
    }

    #[test]
    fn formats() {
        let r = Report {
            experiment: "demo".into(),
            id: "A0".into(),
            seed: 1,
            config: "reps = 2\n".into(),
            rows: vec![row("err", 64.0, 0.25, 0.01)],
            raw: vec![RawRow { n: 64.0, k: 1, rep: 0, value: 0.5, se: 0.0 }],
            fits: vec![],
            checks: vec![Check { criterion: "A0".into(), rule: Rule::AtMost { series: "err".into(), max: 1.0 } }],
            verdicts: vec![],
            wall_clock_s: 1.5,
        };
        assert_eq!(r.csv(), "experiment,N,k,rep,value,se\ndemo,64,1,0,0.5,0\n");
        assert_eq!(r.plot_data("err"), "# demo err\n# x y yerr\n64 0.25 0.01\n");
        assert!(!r.summary_body().contains("wall_clock"));
        assert!(r.summary().contains("[timing]"));
    }
}
