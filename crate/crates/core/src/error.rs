//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by the estimators, the simulator and the Monte Carlo harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violates a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Scenario or estimator configuration is inconsistent.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A matrix that must be inverted is numerically singular.
    #[error("singular matrix: smallest eigenvalue {min_eigenvalue:e} below tolerance")]
    SingularMatrix { min_eigenvalue: f64 },

    /// A closed-form expression left its real domain (e.g. a negative value
    /// under a square root).
    #[error("numeric domain error: {0}")]
    NumericDomain(String),

    /// An estimate report cannot support the requested operation.
    #[error("invalid report: {0}")]
    InvalidReport(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid_argument(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn numeric_domain(msg: impl Into<String>) -> Self {
        Error::NumericDomain(msg.into())
    }
}
