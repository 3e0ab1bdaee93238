//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by model construction, identification, and the
/// experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// Matrix or signal dimensions do not agree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An argument is outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A matrix entry is NaN or infinite where finite values are required.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// Not enough samples for the requested operation.
    #[error("insufficient data: need at least {required} samples, got {actual}")]
    InsufficientData { required: usize, actual: usize },

    /// The data does not support an estimate of the requested order.
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// A coordinate transformation is numerically singular.
    #[error("singular transform: condition estimate {condition:.3e} exceeds limit")]
    SingularTransform { condition: f64 },

    /// Neither transformation route could recover the cyclic structure.
    #[error("unrecoverable structure: controllability route: {controllability}; observability route: {observability}")]
    UnrecoverableStructure {
        controllability: String,
        observability: String,
    },

    /// The requested operation is not supported for this model shape.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A weight vector violates the standard simplex constraints.
    #[error("simplex violation of magnitude {violation:.3e}")]
    SimplexViolation { violation: f64 },

    /// A reference signal channel is constant, so FIT is undefined.
    #[error("degenerate reference: {0}")]
    DegenerateReference(String),

    /// The experiment configuration is invalid.
    #[error("config error: {0}")]
    Config(String),

    /// Reading or writing report files failed.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A serialized document could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
