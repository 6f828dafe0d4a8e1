use thiserror::Error;

pub type Result<T> = std::result::Result<T, CodaError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodaError {
    #[error("non-positive entry {value} at row {row}, column {col} (zeros are not imputed)")]
    NonPositiveEntry { row: usize, col: usize, value: f64 },

    #[error("duplicate part name `{0}`")]
    DuplicatePartName(String),

    #[error("a composition needs at least 2 parts, got {0}")]
    TooFewParts(usize),

    #[error("a composition needs at least 1 observation")]
    NoObservations,

    #[error("ragged matrix: row {row} has {found} entries, expected {expected}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid sequential binary partition: {0}")]
    InvalidSbp(String),

    #[error("at least 2 observations are required, got {0}")]
    DegenerateSample(usize),

    #[error("column subset is empty")]
    EmptySubset,

    #[error("column index {index} out of range for {len} columns")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("logratio matrix must be column-centered")]
    NotCentered,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("alpha_max must be positive, got {0}")]
    NonPositiveAlphaMax(f64),

    #[error("ground truth contains no important logratios")]
    EmptyTruth,

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("unsupported dimension D = {0} (supported: 10, 20)")]
    UnsupportedDimension(usize),
}
