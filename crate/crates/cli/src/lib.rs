//! Scenario files, their execution, and report emitters for the `smms` binary.

pub mod output;
pub mod runner;
pub mod scenario;

pub use runner::{run, Mode, Overrides, RunReport};
pub use scenario::Scenario;

/// Errors that stop a run before any check is evaluated (exit code 2).
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("cannot build scenario: {0}")]
    Build(#[from] smms::error::Error),
}
