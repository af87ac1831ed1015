//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid experiment or architecture configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// An API contract was violated (shape mismatch, stale tape, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A non-finite value reached the numeric core; the run aborts
    /// rather than propagating NaN-poisoned results.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Malformed data fed to an operation (label out of range, ...).
    #[error("data error: {0}")]
    Data(String),

    /// A dataset file could not be parsed.
    #[error("ingestion error at byte {offset}: {message}")]
    Ingestion { offset: u64, message: String },

    /// A global round could not complete (e.g. every cluster produced a
    /// non-finite validation loss).
    #[error("round failure: {0}")]
    RoundFailure(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }
}
