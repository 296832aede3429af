//! Error type shared across the crate.

use alloc::string::String;
use core::fmt;

/// Errors produced by construction, compilation and evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A dimension did not chain (layer widths, input lengths, ...).
    Dimension(String),
    /// An activation key did not resolve in the registry.
    UnknownActivation(String),
    /// The activation exists but lacks the derivative data a construction
    /// needs (`alpha_d1` or `alpha_d2`), or the data violates a requirement
    /// such as `rho'(alpha) = 0`.
    UnsupportedActivation(String),
    /// A documented precondition of an operation was violated.
    Precondition(String),
    /// Declared derivative values disagreed with finite differences.
    Probe(String),
    /// A document could not be parsed.
    Parse(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Dimension(msg) => write!(f, "dimension mismatch: {msg}"),
            Error::UnknownActivation(key) => write!(f, "unknown activation '{key}'"),
            Error::UnsupportedActivation(msg) => write!(f, "unsupported activation: {msg}"),
            Error::Precondition(msg) => write!(f, "precondition violated: {msg}"),
            Error::Probe(msg) => write!(f, "derivative probe failed: {msg}"),
            Error::Parse(msg) => write!(f, "parse error: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
