use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument fell outside the mathematical domain of an operation.
    #[error("domain error in {op}: {message}")]
    Domain { op: &'static str, message: String },

    /// An iterative solver ran out of iterations.
    #[error("{op} did not converge after {iterations} iterations (best x = {best}, residual = {residual:e})")]
    Convergence {
        op: &'static str,
        iterations: usize,
        best: f64,
        residual: f64,
    },

    /// Sketch parameters outside their allowed ranges.
    #[error("invalid sketch configuration: {0}")]
    Config(String),

    /// Sketches with different parameters or hash schemes cannot be merged.
    #[error("incompatible sketches: {0}")]
    Incompatible(String),

    /// A serialized sketch did not parse.
    #[error("sketch format error: {0}")]
    Format(String),

    /// A hash bit stream ran out of bits before the first 1-bit.
    #[error("bit stream exhausted: no 1-bit within {capacity} bits")]
    Capacity { capacity: usize },
}

impl Error {
    pub(crate) fn domain(op: &'static str, message: impl Into<String>) -> Self {
        Error::Domain {
            op,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
