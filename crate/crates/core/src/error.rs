use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("solver failed to converge after {sweeps} sweeps (last residual {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },
    #[error("drift value {value:e} exceeds declared bound {bound:e} at x={x:?}, x0={x0:?}")]
    DriftBound {
        value: f64,
        bound: f64,
        x: Vec<f64>,
        x0: Vec<f64>,
    },
    #[error("log-weight {0:e} overflows; reduce T*|b|^2")]
    WeightOverflow(f64),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("unknown experiment {name:?}; registered: {known}")]
    UnknownExperiment { name: String, known: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

pub(crate) fn precondition<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Precondition(msg.into()))
}
