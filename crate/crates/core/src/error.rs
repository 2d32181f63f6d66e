use thiserror::Error;

/// Errors raised by the regularisation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("pole at s = {s}: {reason}")]
    Pole { s: f64, reason: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error(
        "ill-conditioned fit (condition number {condition:.3e}); retry with fewer expansion terms"
    )]
    IllConditioned { condition: f64 },
    #[error("regularised limit does not converge: {0}")]
    Divergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
