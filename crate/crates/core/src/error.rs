use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("point (r={r}, z={z}) lies outside the grid")]
    OutOfDomain { r: f64, z: f64 },

    #[error("time {t} is outside the stored history [{first}, {last}]")]
    OutOfHistory { t: f64, first: f64, last: f64 },

    #[error("snapshot times must increase strictly: {previous} then {next}")]
    NonIncreasingTime { previous: f64, next: f64 },

    #[error("history is empty")]
    EmptyHistory,

    #[error("need at least {needed} snapshots, found {found}")]
    InsufficientSnapshots { needed: usize, found: usize },

    #[error("poisson solve did not reach tolerance {tol:e}: relative residual {residual:e} after {iterations} iterations")]
    PoissonNotConverged {
        residual: f64,
        tol: f64,
        iterations: usize,
    },

    #[error("non-finite value in the state at t = {t}")]
    NonFinite { t: f64 },

    #[error("time step {dt:e} violates the stability limit {limit:e} ({which})")]
    CflViolation {
        dt: f64,
        limit: f64,
        which: &'static str,
    },

    #[error("invalid initial data: {0}")]
    InvalidData(String),

    #[error("zoom speed Q is zero")]
    ZeroSpeed,

    #[error("every sample of the cube is masked")]
    FullyMasked,

    #[error("insufficient valid samples: {0}")]
    InsufficientSamples(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("corrupt snapshot {path:?}: {message}")]
    CorruptSnapshot { path: PathBuf, message: String },

    #[error("no snapshots found in {0:?}")]
    NoSnapshots(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
