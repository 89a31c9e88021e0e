use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates a named model invariant.
    #[error("invalid configuration: {invariant} ({detail})")]
    InvalidConfig { invariant: &'static str, detail: String },

    #[error("domain error in {function}: {detail}")]
    Domain { function: &'static str, detail: String },

    /// The operation is only defined for a restricted parameter regime.
    #[error("precondition failed for {operation}: {detail}")]
    Precondition { operation: &'static str, detail: String },

    /// Adaptive quadrature stopped before meeting its tolerance.
    #[error("quadrature did not converge after {subdivisions} subdivisions (estimate {estimate:e}, error {error:e})")]
    Quadrature { estimate: f64, error: f64, subdivisions: usize },

    /// A closed-form probability left the unit interval by more than the slack.
    #[error("{quantity} evaluated to {raw:e}, outside [0, 1]")]
    OutOfRange { quantity: &'static str, raw: f64 },

    #[error("invalid input to {operation}: {detail}")]
    InvalidInput { operation: &'static str, detail: String },

    #[error("failed to parse configuration: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, #[source] source: std::io::Error },

    #[error("thread pool: {0}")]
    ThreadPool(String),
}

impl Error {
    pub(crate) fn config(invariant: &'static str, detail: impl Into<String>) -> Self {
        Error::InvalidConfig { invariant, detail: detail.into() }
    }

    pub(crate) fn input(operation: &'static str, detail: impl Into<String>) -> Self {
        Error::InvalidInput { operation, detail: detail.into() }
    }

    pub(crate) fn precondition(operation: &'static str, detail: impl Into<String>) -> Self {
        Error::Precondition { operation, detail: detail.into() }
    }
}
