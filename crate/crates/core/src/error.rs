use std::path::PathBuf;

use crate::corpus::SentenceId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unknown sentence id {0}")]
    UnknownSentence(SentenceId),

    #[error("sentence {0} appears more than once in the script")]
    DuplicateSentence(SentenceId),

    #[error("set {set} has {len} sentences, expected {expected}")]
    SetLength {
        set: usize,
        len: usize,
        expected: usize,
    },

    #[error("duplicate sentence id {0} in pool")]
    DuplicatePoolId(SentenceId),

    #[error("sentence {id}: unit index {unit} out of range for inventory of size {size}")]
    UnitOutOfRange {
        id: SentenceId,
        unit: usize,
        size: usize,
    },

    #[error("sentence {0} has no units")]
    EmptyUnits(SentenceId),

    #[error("vector dimensions differ: {left} vs {right}")]
    Dimension { left: usize, right: usize },

    #[error("scripts have different shapes: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("inventories differ")]
    InventoryMismatch,

    #[error("need {needed} sentences but only {available} are available")]
    Capacity { needed: usize, available: usize },

    #[error("sentence {id} is missing the {field} annotation")]
    MissingAnnotation { id: SentenceId, field: &'static str },

    #[error("unwanted entries not found in the script: {}", .0.join(", "))]
    Unresolved(Vec<String>),

    #[error("{0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: no valid records")]
    EmptyPool { path: PathBuf },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

/// Coarse classification used by the command-line frontend to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Io,
    Validation,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) => ErrorKind::Usage,
            Error::Io { .. } | Error::Parse { .. } | Error::EmptyPool { .. } => ErrorKind::Io,
            _ => ErrorKind::Validation,
        }
    }
}
