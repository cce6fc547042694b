use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the rating engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: malformed JSON: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: invalid field `{field}`: {message}")]
    InvalidRecord {
        line: usize,
        field: String,
        message: String,
    },

    #[error("invalid field `{field}`: {message}")]
    Invalid { field: String, message: String },

    #[error("game {game}: feature `{feature}`: {message}")]
    Feature {
        game: usize,
        feature: String,
        message: String,
    },

    #[error("text error: {0}")]
    Text(String),

    #[error("tag expression error at offset {offset}: {message}")]
    TagExpr { offset: usize, message: String },

    #[error("model `{0}` is not indexed")]
    UnknownModel(String),

    #[error("prior for term `{0}` is still \"cv\"; tune it before fitting")]
    UnresolvedPrior(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by unreadable or unwritable files rather than
    /// bad content.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
