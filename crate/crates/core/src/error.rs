use thiserror::Error;

/// Errors raised by the simulation and verification routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("invalid pointer map: {0}")]
    InvalidPointerMap(String),

    #[error("degenerate step at vertex {vertex}: all transition probabilities below {threshold:e}")]
    DegenerateStep { vertex: usize, threshold: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("window padding: {0}")]
    Padding(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("integration failure at step {step}: {reason}")]
    Integration { step: usize, reason: String },

    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn dim_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Dimension(msg.into()))
}
