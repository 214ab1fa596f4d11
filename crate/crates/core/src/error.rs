use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("missing column `{0}` in header")]
    MissingColumn(String),

    #[error("invalid cell at row {row}, column `{column}`: {value:?} is not a finite number")]
    InvalidCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("duplicate feature name `{0}`")]
    DuplicateFeature(String),

    #[error("duplicate class name `{0}`")]
    DuplicateClass(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite input value at feature {0}")]
    NonFiniteInput(usize),

    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("training data has a single class; at least two are required")]
    SingleClass,

    #[error("objective returned non-finite value {value} at position {position:?}")]
    NonFiniteObjective { value: f64, position: Vec<f64> },

    #[error("unknown benchmark `{0}`")]
    UnknownBenchmark(String),

    #[error("unsupported document: expected format `{expected}` version {version}, found `{found}` version {found_version}")]
    Format {
        expected: String,
        version: u32,
        found: String,
        found_version: u32,
    },

    #[error("{features} features exceed the exact Shapley cap of {cap} and sampling is disabled")]
    ShapleyCapExceeded { features: usize, cap: usize },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Tags an error with the pipeline stage that produced it.
    pub fn at(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
