//! Crate-wide error type.

/// Errors surfaced by lattice operations, geometry ingestion, and planning.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Two grids that must share a lattice do not; the caller has to
    /// co-register (resample) before combining them.
    #[error("lattice mismatch: {0}")]
    LatticeMismatch(String),

    /// A rotation matrix failed the orthonormality / determinant check.
    #[error("invalid rotation: {0}")]
    InvalidRotation(String),

    /// An operation received an empty grid where content is required.
    #[error("empty grid: {0}")]
    EmptyGrid(String),

    /// A parameter is outside its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Malformed input file; `offset` is the byte position where parsing gave up.
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: u64, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn mismatch(msg: impl Into<String>) -> Self {
        Error::LatticeMismatch(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
