//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by construction, validation, solvers, and file I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// Matrix or vector dimensions are empty or inconsistent.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// A non-finite value (NaN or infinity) was encountered where finite
    /// data is required.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// An argument is outside its documented domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// An iterative routine exhausted its iteration budget without meeting
    /// its convergence criterion.
    #[error("{routine} did not converge: {detail}")]
    NonConvergence { routine: &'static str, detail: String },

    /// Internal consistency check failed (for example a certified upper bound
    /// falling below a certified lower bound).
    #[error("internal inconsistency: {0}")]
    Inconsistency(String),

    /// Malformed input file.
    #[error("parse error: {0}")]
    Parse(String),

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
