//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PsError {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Evaluation requested at or beyond an integrable singularity.
    #[error("singular input: {0}")]
    Singular(String),

    /// API misuse (bad indices, empty inputs, missing gradients).
    #[error("usage error: {0}")]
    Usage(String),

    /// Requested value lies outside the stored window of a field.
    #[error("range error: {0}")]
    Range(String),

    /// Fixed-point iteration failed to reach tolerance within the
    /// iteration budget; carries the sup-norm residual history.
    #[error("solver did not converge: residuals {history:?}")]
    NonConvergence { history: Vec<f64> },

    /// Non-finite sample encountered during quadrature.
    #[error("evaluation error: non-finite value at {0}")]
    NonFinite(String),

    /// Input data rejected (e.g. non-radial backscatter data handed to
    /// the radial layer-stripping scheme).
    #[error("data rejected: {0}")]
    Rejected(String),

    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, PsError>;
