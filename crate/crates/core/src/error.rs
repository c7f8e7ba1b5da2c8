use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("candidate pool too small: need at least {required}, got {actual}")]
    PoolTooSmall { required: usize, actual: usize },

    #[error("missing gold target{}", .0.as_deref().map(|id| format!(" for item {id}")).unwrap_or_default())]
    MissingTarget(Option<String>),

    #[error("single-candidate record requested but pool has no greedy candidate")]
    MissingGreedy,

    #[error("template error: {0}")]
    Template(String),

    #[error("generation failed after {} attempt(s): {}", .attempts.len(), .attempts.last().map(String::as_str).unwrap_or("no attempts"))]
    Generation { attempts: Vec<String> },

    #[error("corpus mismatch: {0}")]
    CorpusMismatch(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid counts: {0}")]
    InvalidCounts(String),

    #[error("cannot aggregate an empty score list")]
    EmptyAggregate,

    #[error("length budget {max_len} is smaller than the template overhead {overhead}")]
    BudgetTooSmall { max_len: usize, overhead: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid split ratios: {0}")]
    InvalidSplit(String),

    #[error("mock LLM has no gold entry for item {0:?}")]
    MockMiss(Option<String>),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("corrector endpoint error: {0}")]
    Corrector(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
