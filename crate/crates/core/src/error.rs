use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Parameters or data that are inconsistent with each other.
    #[error("configuration error: {0}")]
    Config(String),

    /// The mathematical hypothesis an operation relies on does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Two grids that were expected to coincide do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite value at grid node (ix={ix}, it={it})")]
    NonFinite { ix: usize, it: usize },

    /// Not enough usable records to fit a law.
    #[error("need at least {needed} usable records, got {got}")]
    InsufficientRecords { needed: usize, got: usize },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
