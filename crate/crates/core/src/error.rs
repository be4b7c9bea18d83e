use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Ingest {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no assertions loaded from {0}")]
    EmptyGraph(PathBuf),
    #[error("no valid vectors in {0}")]
    EmptyEmbeddings(PathBuf),
    #[error("unknown concept `{0}`")]
    UnknownConcept(String),
    #[error("invalid concept `{0}`")]
    InvalidConcept(String),
    #[error("walk has {0} concept(s); at least 2 are required")]
    WalkTooShort(usize),
    #[error("invalid walk config: {0}")]
    InvalidConfig(String),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
