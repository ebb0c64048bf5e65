use thiserror::Error;

/// Errors raised by the calibration and key-rate engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input lies outside the range where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A structural requirement on an input (shape, symmetry, index) is violated.
    #[error("validation error: {0}")]
    Validation(String),

    /// A numerical routine failed or produced a result outside tolerance.
    #[error("numerical error: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

pub(crate) fn numerical(msg: impl Into<String>) -> Error {
    Error::Numerical(msg.into())
}
