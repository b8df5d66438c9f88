//! Crate-wide error type.

use std::fmt;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An input value violated a documented precondition.
    InvalidParameter {
        name: &'static str,
        reason: String,
    },
    /// Two paired inputs disagree on length or dimension.
    ShapeMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    /// A selected link cannot carry any data (zero achievable rate).
    InfeasibleLink {
        user: usize,
    },
    /// Configuration file could not be loaded or validated.
    Config(String),
    /// Checkpoint could not be read, or its version is unsupported.
    Checkpoint(String),
    /// File I/O failure, with the offending path.
    Io {
        path: String,
        message: String,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { name, reason } => {
                write!(f, "invalid parameter `{name}`: {reason}")
            }
            Error::ShapeMismatch {
                context,
                expected,
                got,
            } => write!(f, "shape mismatch in {context}: expected {expected}, got {got}"),
            Error::InfeasibleLink { user } => {
                write!(f, "user {user} is selected but has zero achievable rate")
            }
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Checkpoint(msg) => write!(f, "checkpoint error: {msg}"),
            Error::Io { path, message } => write!(f, "i/o error on {path}: {message}"),
        }
    }
}

impl std::error::Error for Error {}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
