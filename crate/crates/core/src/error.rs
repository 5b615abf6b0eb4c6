use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by graph construction, simulation setup and the
/// supervising agent.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("opinion metric {0} outside [0, 1]")]
    OpinionOutOfRange(f64),

    #[error("echo chamber is empty, cannot seed the inside opinion")]
    EmptyChamber,

    #[error("echo chamber covers every node, cannot seed the outside opinion")]
    NoOutsideNodes,

    #[error("empty run-record list")]
    EmptyRecords,

    #[error("empty training batch")]
    EmptyBatch,

    #[error("checkpoint network shape {found:?} does not match expected {expected:?}")]
    ArchitectureMismatch {
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed config file {path}: {message}")]
    ConfigParse { path: PathBuf, message: String },

    #[error("malformed checkpoint {path}: {message}")]
    CheckpointParse { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
