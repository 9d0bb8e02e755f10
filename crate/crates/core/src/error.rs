use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),
    /// Parameters or a configuration that cannot describe a valid system.
    #[error("configuration error: {0}")]
    Config(String),
    /// A simulation state violated one of its structural invariants.
    #[error("invariant violated: {0}")]
    Invariant(String),
    /// A statistic could not be computed from the data supplied.
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
