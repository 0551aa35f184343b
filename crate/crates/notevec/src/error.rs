//! Error type shared across the pipeline.
//!
//! Every variant maps to a stable category string so the CLI can emit
//! machine-parseable `error:<category>:<message>` lines.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// CSV header or cell violates a declared schema.
    #[error("{0}")]
    Schema(String),

    /// A model or bag file is structurally malformed.
    #[error("{0}")]
    Format(String),

    /// A parameter is outside the range its consumer accepts.
    #[error("{0}")]
    Param(String),

    /// A word is not in the vocabulary.
    #[error("word not in vocabulary: {0}")]
    Lookup(String),

    /// Mathematically undefined input (e.g. cosine of a zero vector).
    #[error("{0}")]
    Domain(String),

    /// Training cannot proceed (empty vocabulary, single-class labels).
    #[error("{0}")]
    Train(String),

    /// Evaluation cannot produce a defined result.
    #[error("{0}")]
    Eval(String),

    /// Bad key or value in the pipeline config.
    #[error("{0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable category tag used in CLI error lines.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Schema(_) => "schema",
            Error::Format(_) => "format",
            Error::Param(_) => "param",
            Error::Lookup(_) => "lookup",
            Error::Domain(_) => "domain",
            Error::Train(_) => "train",
            Error::Eval(_) => "eval",
            Error::Config(_) => "config",
        }
    }

    /// Process exit code for the CLI. Lookup failures get their own code so
    /// scripted `similar` queries can distinguish "unknown word" from crash.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Lookup(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
