use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("node id {node} out of range for graph with {n} nodes")]
    InvalidNode { node: usize, n: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("graph statistics undefined: {0}")]
    Stats(String),

    #[error("{measure} did not converge within {iterations} iterations")]
    Convergence { measure: String, iterations: usize },

    #[error("centrality {measure} failed: {source}")]
    Centrality {
        measure: String,
        #[source]
        source: Box<Error>,
    },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("k selection failed: {0}")]
    Selection(String),

    #[error("feature assembly failed: {0}")]
    Assembly(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("feature mismatch: expected {expected:?}, got {actual:?}")]
    FeatureMismatch {
        expected: Vec<String>,
        actual: Vec<String>,
    },

    #[error("split failed: {0}")]
    Split(String),

    #[error("evaluation failed: {0}")]
    Evaluation(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
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
