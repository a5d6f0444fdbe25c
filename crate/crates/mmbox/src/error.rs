use thiserror::Error;

/// Errors surfaced by construction, validation, and search routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("size limit: {0}")]
    Size(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = core::result::Result<T, Error>;
