use std::io;

use thiserror::Error;

/// Errors surfaced by the planners, the simulator and the experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller passed arguments outside an operation's domain.
    #[error("usage error: {0}")]
    Usage(String),

    /// An internal invariant broke, e.g. a planner emitted an illegal batch.
    #[error("contract violation: {0}")]
    Contract(String),

    /// An experiment configuration failed validation.
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
