use std::sync::Mutex;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};

/// Contents of an experiment file.
///
/// ```toml
/// experiment = "lemvitl2_rate"
/// seed = 7
/// out = "out"      # optional
/// workers = 4      # optional
///
/// [params]
/// reps = 200
/// n_list = [64, 256, 1024, 4096]
/// ```
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub params: toml::Table,
}

impl ExperimentConfig {
    pub fn new(experiment: impl Into<String>, seed: u64) -> Self {
        Self {
            experiment: experiment.into(),
            seed,
            out: None,
            workers: None,
            params: toml::Table::new(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    /// `CMVSIM_SEED` and `CMVSIM_OUT` override the file.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(s) = std::env::var("CMVSIM_SEED") {
            self.seed = s
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("CMVSIM_SEED must be an unsigned integer, got {s:?}")))?;
        }
        if let Ok(o) = std::env::var("CMVSIM_OUT") {
            self.out = Some(PathBuf::from(o));
        }
        Ok(())
    }
}

/// Typed access to `[params]` with defaults. Every key read is recorded so
/// that unknown keys can be rejected before any computation starts.
#[derive(Debug)]
pub struct Params<'a> {
    table: &'a toml::Table,
    used: Mutex<BTreeSet<String>>,
    echo: Mutex<toml::Table>,
}

fn bad(key: &str, want: &str) -> Error {
    Error::Config(format!("parameter {key:?} must be {want}"))
}

impl<'a> Params<'a> {
    pub fn new(table: &'a toml::Table) -> Self {
        Self {
            table,
            used: Mutex::new(BTreeSet::new()),
            echo: Mutex::new(toml::Table::new()),
        }
    }

    fn take(&self, key: &str) -> Option<&'a toml::Value> {
        self.used.lock().expect("params lock").insert(key.to_string());
        self.table.get(key)
    }

    fn record(&self, key: &str, v: toml::Value) {
        self.echo.lock().expect("params lock").insert(key.to_string(), v);
    }

    pub fn f64(&self, key: &str, default: f64) -> Result<f64> {
        let v = match self.take(key) {
            None => default,
            Some(toml::Value::Float(f)) => *f,
            Some(toml::Value::Integer(i)) => *i as f64,
            Some(_) => return Err(bad(key, "a number")),
        };
        if !v.is_finite() {
            return Err(bad(key, "finite"));
        }
        self.record(key, toml::Value::Float(v));
        Ok(v)
    }

    pub fn usize(&self, key: &str, default: usize) -> Result<usize> {
        let v = match self.take(key) {
            None => default,
            Some(toml::Value::Integer(i)) if *i >= 0 => *i as usize,
            Some(_) => return Err(bad(key, "a nonnegative integer")),
        };
        self.record(key, toml::Value::Integer(v as i64));
        Ok(v)
    }

    pub fn usize_list(&self, key: &str, default: &[usize]) -> Result<Vec<usize>> {
        let v = match self.take(key) {
            None => default.to_vec(),
            Some(toml::Value::Array(a)) => a
                .iter()
                .map(|x| match x {
                    toml::Value::Integer(i) if *i >= 0 => Ok(*i as usize),
                    _ => Err(bad(key, "a list of nonnegative integers")),
                })
                .collect::<Result<_>>()?,
            Some(_) => return Err(bad(key, "a list of nonnegative integers")),
        };
        self.record(key, toml::Value::Array(v.iter().map(|&x| toml::Value::Integer(x as i64)).collect()));
        Ok(v)
    }

    pub fn f64_list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        let v = match self.take(key) {
            None => default.to_vec(),
            Some(toml::Value::Array(a)) => a
                .iter()
                .map(|x| match x {
                    toml::Value::Float(f) => Ok(*f),
                    toml::Value::Integer(i) => Ok(*i as f64),
                    _ => Err(bad(key, "a list of numbers")),
                })
                .collect::<Result<_>>()?,
            Some(_) => return Err(bad(key, "a list of numbers")),
        };
        self.record(key, toml::Value::Array(v.iter().map(|&x| toml::Value::Float(x)).collect()));
        Ok(v)
    }

    /// Fails on keys that were never read.
    pub fn finish(&self) -> Result<()> {
        let used = self.used.lock().expect("params lock");
        let unknown: Vec<&String> = self.table.keys().filter(|k| !used.contains(*k)).collect();
        if !unknown.is_empty() {
            return Err(Error::Config(format!(
                "unknown parameters {unknown:?}; accepted: {:?}",
                used.iter().collect::<Vec<_>>()
            )));
        }
        Ok(())
    }

    /// Effective parameters, defaults included, as TOML.
    pub fn echo(&self) -> String {
        toml::to_string(&*self.echo.lock().expect("params lock")).unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_defaults() {
        let c = ExperimentConfig::parse(
            "experiment = \"hoeffding\"\nseed = 3\n[params]\nreps = 10\nn_list = [1, 2]\nh = 0.5\n",
        )
        .unwrap();
        assert_eq!(c.experiment, "hoeffding");
        assert_eq!(c.seed, 3);
        let p = Params::new(&c.params);
        assert_eq!(p.usize("reps", 5).unwrap(), 10);
        assert_eq!(p.usize("other", 5).unwrap(), 5);
        assert_eq!(p.usize_list("n_list", &[]).unwrap(), vec![1, 2]);
        assert_eq!(p.f64("h", 1.0).unwrap(), 0.5);
        p.finish().unwrap();
        assert!(p.echo().contains("other = 5"));
    }

    #[test]
    fn rejects_unknown_and_mistyped() {
        let c = ExperimentConfig::parse("experiment = \"x\"\n[params]\nreps = \"many\"\ntypo = 1\n").unwrap();
        let p = Params::new(&c.params);
        assert!(p.usize("reps", 1).is_err());
        assert!(p.finish().unwrap_err().to_string().contains("typo"));
        assert!(ExperimentConfig::parse("experiment = \"x\"\nbogus = 1\n").is_err());
    }
}
