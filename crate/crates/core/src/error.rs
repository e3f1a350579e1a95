use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters or inconsistent experiment setup.
    #[error("configuration error: {0}")]
    Config(String),

    /// A value outside the domain of a formula (e.g. a non-positive round-trip time).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("no visibility: {0}")]
    NoVisibility(String),

    #[error("no co-visible samples between the two legs")]
    NoOverlap,

    /// Malformed input file. `line` is the 1-based physical line number.
    #[error("parse error at line {line}, column `{column}`: {message}")]
    Parse {
        line: usize,
        column: String,
        message: String,
    },

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("replay error: {0}")]
    Replay(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, column: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column: column.into(),
            message: message.into(),
        }
    }
}
