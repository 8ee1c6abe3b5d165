use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the counting, transform and spectral routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Integer arithmetic would leave the range the enumeration core handles.
    #[error("integer overflow: {0}")]
    Overflow(String),

    /// The brute-force oracle refuses cutoffs above its cap.
    #[error("oracle refused X = {x}: above the configured cap {cap}")]
    OracleCap { x: f64, cap: f64 },

    /// Adaptive quadrature ran out of budget before meeting its tolerance.
    #[error("quadrature did not converge: estimate {estimate}, achieved error {achieved:e}, requested {requested:e}")]
    Quadrature {
        estimate: f64,
        achieved: f64,
        requested: f64,
    },

    /// Fundamental-domain reduction did not settle within the iteration budget.
    #[error("reduction did not terminate after {0} steps")]
    NonTermination(usize),

    /// A work budget was exceeded.
    #[error("budget exceeded: {0}")]
    Budget(String),

    /// Malformed input file.
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    /// Invalid configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors caused by bad input rather than by a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::OracleCap { .. } | Error::Parse { .. } | Error::Config(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
