use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Malformed or out-of-range input (bad probability vector, negative `a`, ...).
    #[error("validation error: {0}")]
    Validation(String),
    /// Input outside the mathematical domain of a function (pole, vanishing weight).
    #[error("domain error: {0}")]
    Domain(String),
    /// A bound was requested outside the parameter regime where it holds.
    #[error("regime error: {0}")]
    Regime(String),
    /// The requested computation exceeds the configured work limit.
    #[error("resource error: {0}")]
    Resource(String),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn regime(msg: impl Into<String>) -> Self {
        Error::Regime(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
