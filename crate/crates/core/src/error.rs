use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {}", .violations.join("; "))]
    ConfigInvalid { violations: Vec<String> },

    #[error("failed to parse configuration: {0}")]
    ConfigParse(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("environment lifecycle: {0}")]
    Lifecycle(&'static str),

    #[error("instance too large for exhaustive search: {0}")]
    Size(String),

    #[error("no samples selected by the mask of actor {actor}")]
    EmptySubsample { actor: usize },

    #[error("checkpoint checksum mismatch")]
    Checksum,

    #[error("checkpoint format: {0}")]
    CheckpointFormat(String),

    #[error("checkpoint was written for config hash {found}, expected {expected}")]
    ConfigHashMismatch { expected: String, found: String },

    #[error("training diverged at step {step}: {detail}")]
    Diverged { step: u64, detail: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
