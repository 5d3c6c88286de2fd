use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Invalid construction parameters (grid shape, deformation guard, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// A state or parameter lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Operands that cannot be combined (grid mismatch, axis out of range, ...).
    #[error("usage error: {0}")]
    Usage(String),

    #[error("numerical consistency error: {0}")]
    NumericalConsistency(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    /// Aggregated scenario validation failure, one entry per offending parameter.
    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),
}

pub type Result<T> = std::result::Result<T, Error>;
