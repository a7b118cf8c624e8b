use thiserror::Error;

/// Errors raised across the crate.
///
/// `Structural` is reserved for malformed inputs (wrong table shapes, empty
/// supports, out-of-range parameters). Failed model assumptions are not errors:
/// they are reported through [`crate::model::ValidationReport`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("structural error: {0}")]
    Structural(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("lattice mismatch: expected {expected} sites, found {found}")]
    LatticeMismatch { expected: usize, found: usize },

    #[error("CFL violation: dt = {dt} exceeds dx / speed = {limit}")]
    Cfl { dt: f64, limit: f64 },

    #[error("padding violation: {0}")]
    Padding(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("hash mismatch: expected {expected}, found {found}")]
    HashMismatch { expected: String, found: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn structural(msg: impl Into<String>) -> Error {
    Error::Structural(msg.into())
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
