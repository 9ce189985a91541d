//! Error type shared by all modules.
//!
//! The variants map onto the CLI exit codes: `Internal` is a hard invariant
//! failure (exit 1), `Domain`/`Config` are caller mistakes (exit 2), and
//! `Resource` means a computation was refused because it exceeds the
//! configured desk-scale budget (exit 3).

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent or malformed configuration (overlapping prime sets,
    /// unparsable descriptors, invalid flag combinations).
    #[error("configuration error: {0}")]
    Config(String),

    /// The requested computation exceeds the enumeration budget.
    #[error("resource budget exceeded: {0}")]
    Resource(String),

    /// Two routes that must agree disagreed, or a hard assertion failed.
    /// Any occurrence is a bug or a falsified formula, never user error.
    #[error("internal consistency failure: {0}")]
    Internal(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
    pub fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }
    pub fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }

    /// Process exit code the CLI maps this error to.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Internal(_) => 1,
            Error::Domain(_) | Error::Config(_) => 2,
            Error::Resource(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
