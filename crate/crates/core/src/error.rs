use thiserror::Error;

/// Errors raised by the simulation core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two objects that must share a transverse grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A propagation step would be undersampled on the current grid.
    #[error("sampling violation: {0}")]
    Sampling(String),

    /// An estimator has nothing to normalize against (zero intensity).
    #[error("degenerate correlation: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
