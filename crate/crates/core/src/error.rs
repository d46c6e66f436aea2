use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty knowledge graph")]
    EmptyGraph,

    #[error("degenerate split: {0}")]
    DegenerateSplit(String),

    #[error("invalid triple: {0}")]
    InvalidTriple(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{0}")]
    Format(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Fetch(#[from] crate::ingest::fetch::FetchError),

    #[error("{kind} id {id} out of range (count {count})")]
    IdOutOfRange {
        kind: &'static str,
        id: usize,
        count: usize,
    },

    #[error("position {position}: {source}")]
    AtPosition {
        position: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("unknown {kind} label {label:?}")]
    UnknownLabel { kind: &'static str, label: String },

    #[error("invalid model parameters: {0}")]
    Model(String),

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("all {0} trials failed")]
    AllTrialsFailed(usize),

    #[error("missing {}", .0.display())]
    MissingFile(PathBuf),

    #[error("directory {} exists and is not empty", .0.display())]
    DirectoryNotEmpty(PathBuf),

    #[error("bad magic header in trained model")]
    BadMagic,

    #[error("format version mismatch: file has version {found}, reader supports version {expected}")]
    VersionMismatch { found: u8, expected: u8 },

    #[error("checksum mismatch: stored {stored:016x}, computed {computed:016x}")]
    Checksum { stored: u64, computed: u64 },

    #[error("truncated trained model: {0}")]
    Truncated(String),
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}
