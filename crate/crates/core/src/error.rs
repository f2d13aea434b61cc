//! Crate-wide error type.

use std::path::PathBuf;

/// Errors produced by dataset handling, problem construction and analysis.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: row {row}: {message}")]
    CsvRow {
        path: PathBuf,
        /// 1-based data row number (header excluded).
        row: usize,
        message: String,
    },

    #[error("dataset '{name}': {message}")]
    InvalidDataset { name: String, message: String },

    #[error("invalid mixture spec: {0}")]
    InvalidMixtureSpec(String),

    #[error("pca: target dimension {target} exceeds data dimension {dim}")]
    PcaTargetDim { target: usize, dim: usize },

    #[error("pca: data is degenerate (all points identical), no principal direction exists")]
    PcaDegenerate,

    #[error("center vector has length {got}, problem dimension is {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    #[error("input to stick-breaking transform outside [0,1]: x[{index}] = {value}")]
    TransformDomain { index: usize, value: f64 },

    #[error("evaluation budget exhausted ({budget} evaluations)")]
    BudgetExhausted { budget: usize },

    #[error("budget {budget} is smaller than population size {lambda}")]
    BudgetBelowLambda { budget: usize, lambda: usize },

    #[error("suite manifest: {0}")]
    Manifest(String),

    #[error("unknown builtin dataset id '{0}'")]
    UnknownBuiltin(String),

    #[error("analysis: {0}")]
    Analysis(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("malformed run log {path}: {message}")]
    MalformedRunLog { path: PathBuf, message: String },

    #[error("json error on {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
