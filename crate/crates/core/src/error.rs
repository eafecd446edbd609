use std::path::PathBuf;

use thiserror::Error;

use crate::query::DemonstrativeSeries;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("semantic map has no objects")]
    EmptyMap,

    #[error("user skeleton is not available")]
    SkeletonMissing,

    #[error("demonstrative series {0:?} has no spatial region")]
    UnsupportedSeries(DemonstrativeSeries),

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("degenerate geometry: {0}")]
    Degenerate(&'static str),

    #[error("score distributions are not aligned over the same objects")]
    Misaligned,

    #[error("embedding provider failed: {0}")]
    Provider(String),

    #[error("resolver backend failed: {0}")]
    Backend(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid state: {0}")]
    InvalidState(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(context: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.to_string(),
        }
    }

    /// Errors a caller can fix by correcting an input file, as opposed to
    /// failures that happen while running.
    pub fn is_schema_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Parse { .. }
                | Error::Validation(_)
                | Error::DimensionMismatch { .. }
                | Error::EmptyMap
        )
    }
}
