use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the scheduling pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range (limit {limit})")]
    Range { index: usize, limit: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: expected {expected}, found {found}")]
    Shape { expected: String, found: String },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("constraint violation: {0}")]
    ConstraintViolation(String),

    #[error("invalid config: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("cluster {cluster}: {source}")]
    InCluster {
        cluster: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

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

    pub(crate) fn in_cluster(self, cluster: usize) -> Self {
        Error::InCluster {
            cluster,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
