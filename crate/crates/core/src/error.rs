use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("sparse-binary row {row}: {reason}")]
    InvalidSparseRow { row: usize, reason: String },

    #[error("dimension mismatch at input {index}: expected {expected}, found {found}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },

    #[error("class count mismatch at input {index}: expected {expected}, found {found}")]
    ClassCountMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("label {label} out of range for {num_classes} classes")]
    LabelOutOfRange { label: usize, num_classes: usize },

    #[error("invalid probability row {row}: {reason}")]
    InvalidProbabilities { row: usize, reason: String },

    #[error("period ids must be strictly increasing ({previous} then {next})")]
    UnorderedPeriods { previous: i64, next: i64 },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("learner is not trained")]
    NotTrained,

    #[error("{learner} does not support {what}")]
    Unsupported {
        learner: &'static str,
        what: &'static str,
    },

    #[error("value {value} for `{name}` outside [{low}, {high}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        low: f64,
        high: f64,
    },

    #[error("class {0} has no samples to draw replacements from")]
    EmptyPool(usize),

    #[error("need at least {needed} rows, found {found}")]
    TooFewRows { needed: usize, found: usize },

    #[error("index {index} appears in both the pseudo-labeled batch and the annotated set")]
    OverlappingIndices { index: usize },

    #[error("merged training set is empty")]
    EmptyMerge,

    #[error("requested {requested} rows from a pool of {available}")]
    BudgetExceeded { requested: usize, available: usize },

    #[error("need at least {needed} nonzero differences, found {found}")]
    TooFewDifferences { needed: usize, found: usize },

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("period {period}: file {path} not found")]
    MissingPeriodFile { period: i64, path: PathBuf },

    #[error("period {period}: manifest declares {declared} rows, file has {found}")]
    RowCountMismatch {
        period: i64,
        declared: usize,
        found: usize,
    },

    #[error("invalid manifest: {0}")]
    Manifest(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("serialization: {0}")]
    Serialization(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
