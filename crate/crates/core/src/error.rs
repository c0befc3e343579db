//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failure modes of the library.
///
/// Domain errors report inputs outside an operation's precondition. Resource
/// errors report configured size or time bounds being exceeded, so callers can
/// distinguish "this cannot be answered cheaply" from "this question is
/// malformed".
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// The input violates the operation's precondition.
    #[error("domain error: {0}")]
    Domain(String),
    /// A configured resource bound (size, iteration budget) was exceeded.
    #[error("resource bound exceeded: {0}")]
    Resource(String),
    /// A certificate or a piece of certificate data failed a check.
    #[error("certificate invalid: {0}")]
    CertificateInvalid(String),
    /// Floating-point exponent overflow against the configured bound.
    #[error("exponent overflow: {0}")]
    Overflow(String),
    /// Malformed certificate text.
    #[error("parse error at line {line}: {message}")]
    Parse {
        /// One-based line number of the offending line.
        line: usize,
        /// What was wrong with it.
        message: String,
    },
    /// An internal consistency check failed; indicates a bug.
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::CertificateInvalid(msg.into())
    }

    pub(crate) fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
