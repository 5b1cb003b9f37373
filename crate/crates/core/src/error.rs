use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Every violated constraint of a configuration, reported together.
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("iteration blew up at k = {k}, time node {node} (sup {sup:.3e} > limit {limit:.3e})")]
    BlowUp {
        k: usize,
        node: usize,
        sup: f64,
        limit: f64,
    },

    #[error("no admissible horizon: contraction not reached down to T - s = {min_horizon:.3e} ({detail})")]
    ContractionFailed { min_horizon: f64, detail: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{subcommand} / {stage}: {source}")]
    Stage {
        subcommand: String,
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn in_stage(self, subcommand: impl Into<String>, stage: impl Into<String>) -> Self {
        Error::Stage {
            subcommand: subcommand.into(),
            stage: stage.into(),
            source: Box::new(self),
        }
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}
