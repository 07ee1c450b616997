use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point {coords:?} lies outside the chart of model '{model}'")]
    OutsideChart { model: String, coords: Vec<f64> },
    #[error("metric is not positive definite at {0:?}")]
    NotPositiveDefinite(Vec<f64>),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unknown {kind} '{key}'; valid values: {}", valid.join(", "))]
    UnknownRegistryKey {
        kind: String,
        key: String,
        valid: Vec<String>,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("every grid point is masked")]
    AllMasked,
    #[error("potential is not positive at {0:?}")]
    NonPositivePotential(Vec<f64>),
    #[error("potential does not vanish on the boundary (max |u| = {0:e})")]
    BoundaryPotential(f64),
    #[error("unsupported boundary configuration: {0}")]
    UnsupportedBoundary(String),
    #[error("ill-conditioned system (condition number {0:e})")]
    IllConditioned(f64),
    #[error("eigensolver failed: {0}")]
    EigenFailure(String),
    #[error("perturbed metric g + t h is not positive definite at {0:?}")]
    PerturbationNotSpd(Vec<f64>),
}

pub type Result<T> = std::result::Result<T, Error>;
