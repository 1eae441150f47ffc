use thiserror::Error;

use crate::oracle::OracleViolation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input (shapes, indices, duplicates).
    #[error("invalid input: {0}")]
    Input(String),

    /// A numeric argument outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The triangle inequality already fails at exponent 1.
    #[error(
        "not a metric: d({x},{y}) = {d_xy} exceeds d({x},{z}) + d({z},{y}) = {sum}"
    )]
    InvalidMetric {
        x: usize,
        z: usize,
        y: usize,
        d_xy: f64,
        sum: f64,
    },

    #[error("oracle violation: {0}")]
    Oracle(#[from] OracleViolation),

    /// The request would exceed the exhaustive-scan budget.
    #[error("resource limit: {0}")]
    Resource(String),

    #[error("syntax error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
