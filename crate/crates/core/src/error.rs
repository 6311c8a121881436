use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain where the model is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// Arguments are individually valid but cannot be combined.
    #[error("usage error: {0}")]
    Usage(String),
    /// The input is valid but the requested quantity is degenerate (zero flux, diverging limit).
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// The configuration is outside what the linearized detection model supports.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    /// The number-state expansion was truncated too early for the requested accuracy.
    #[error("cutoff {cutoff} insufficient: truncation error estimate {estimate:.3e} exceeds {limit:.1e}")]
    CutoffInsufficient {
        cutoff: usize,
        estimate: f64,
        limit: f64,
    },
    /// Malformed serialized input (CSV profile, JSON state).
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}
