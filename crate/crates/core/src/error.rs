use thiserror::Error;

/// Errors produced by the correlation-inference toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive semi-definite (pivot {pivot:.3e} at index {index})")]
    NotPositiveSemiDefinite { index: usize, pivot: f64 },

    #[error("index order violated: expected i > j, got i={i}, j={j}")]
    IndexOrder { i: usize, j: usize },

    #[error("correlation constraints admit no positive semi-definite completion: {0}")]
    InfeasibleConstraints(String),

    #[error("invalid correlation matrix: {0}")]
    InvalidMatrix(String),

    #[error("value {value} outside the domain {domain}")]
    DomainError { value: f64, domain: &'static str },

    #[error("column {column} has zero variance")]
    ZeroVariance { column: usize },

    #[error("at least {needed} records are required, got {actual}")]
    TooFewRecords { needed: usize, actual: usize },

    #[error("marginal support is degenerate (min == max == {0})")]
    DegenerateSupport(f64),

    #[error("training labels contain a single class")]
    SingleClass,

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },

    #[error("correlation {0} is outside [-1, 1]")]
    OutOfRange(f64),

    #[error("certain-region analysis only supports B = 3 (got B = {0})")]
    UnsupportedB(usize),

    #[error("all shadow labels fall in bin {0}; the meta-classifier cannot be trained")]
    DegenerateLabels(usize),

    #[error("no shadow dataset matched the inferred correlation bins")]
    NoSurvivingDatasets,

    #[error("synthetic pool has no record with label {0}")]
    MissingLabel(u8),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse { row: usize, column: usize, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("unsupported format version {0}")]
    Version(u32),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
