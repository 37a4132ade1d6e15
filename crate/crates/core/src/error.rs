use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported dimension m = {0}")]
    UnsupportedDimension(usize),

    #[error("domain error: {0}")]
    Domain(String),

    /// An eigenvalue sits on the simplex boundary where the SD density diverges.
    #[error("degenerate eigenvalue boundary (min eigenvalue {0:e})")]
    Degenerate(f64),

    #[error("accumulator holds no samples")]
    EmptyAccumulator,

    #[error("cannot factor {0}: cofactor exceeds trial-division range")]
    Unfactorable(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed checkpoint {path}: {reason}")]
    CheckpointFormat { path: PathBuf, reason: String },

    #[error("checkpoint was written for a different run (config hash {found}, expected {expected})")]
    ConfigMismatch { expected: String, found: String },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
