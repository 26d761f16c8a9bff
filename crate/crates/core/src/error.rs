use thiserror::Error;

/// Errors produced by the simulator and its diagnostics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("infinite-activity subordinator requires a positive small-jump truncation (got {0})")]
    TruncationRequired(f64),
    #[error("time {t} outside [0, {horizon}]")]
    Range { t: f64, horizon: f64 },
    #[error("non-finite integrand value {value} at {at}")]
    Evaluation { at: f64, value: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("time grid: {0}")]
    Grid(String),
    #[error("grid point {0} missing from a path and interpolation is disabled")]
    Interpolation(f64),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("mismatched inputs: {0}")]
    Pairing(String),
    #[error("constraint violated: {0}")]
    Constraint(String),
    #[error("missing data: {0}")]
    Data(String),
    #[error("no convergence: {0}")]
    Convergence(String),
    #[error("stationary solution unsupported: {0}")]
    StationarityUnsupported(String),
    #[error("ensemble of {got} samples is below the minimum of {min}")]
    EnsembleTooSmall { got: usize, min: usize },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
