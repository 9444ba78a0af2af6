use thiserror::Error;

pub type Result<T> = std::result::Result<T, VqsError>;

#[derive(Debug, Error)]
pub enum VqsError {
    #[error("size mismatch: expected {expected} sites, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index {index} out of range {lo}..={hi}")]
    OutOfRange { index: usize, lo: usize, hi: usize },

    #[error("parameter {index} outside its bounds [{lo}, {hi}]")]
    OutOfBounds { index: usize, lo: f64, hi: f64 },

    #[error("operator is not Hermitian (max imaginary coefficient {0:e})")]
    NonHermitian(f64),

    #[error("structural error: {0}")]
    Structural(String),

    #[error("sector is empty")]
    EmptySector,

    #[error("requested {requested} eigenpairs but sector dimension is {dimension}")]
    TooManyEigenpairs { requested: usize, dimension: usize },

    #[error("sector dimension {dimension} exceeds the configured cap {cap}")]
    SectorTooLarge { dimension: usize, cap: usize },

    #[error("state is not normalized (norm {0})")]
    Unnormalized(f64),

    #[error("operator leaves the magnetization sector")]
    SectorLeakage,

    #[error("incomplete data, missing bases: {}", .missing.join(", "))]
    IncompleteData { missing: Vec<String> },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("string {string} is not evaluable in basis {basis}")]
    IncompatibleBasis { string: String, basis: String },

    #[error("data inconsistency: {0}")]
    DataInconsistency(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("storage error (retryable): {0}")]
    Storage(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl From<serde_json::Error> for VqsError {
    fn from(e: serde_json::Error) -> Self {
        VqsError::Serialization(e.to_string())
    }
}

impl From<toml::de::Error> for VqsError {
    fn from(e: toml::de::Error) -> Self {
        VqsError::Serialization(e.to_string())
    }
}

impl From<toml::ser::Error> for VqsError {
    fn from(e: toml::ser::Error) -> Self {
        VqsError::Serialization(e.to_string())
    }
}

impl VqsError {
    /// True for failures that may succeed when retried (I/O on the record store).
    pub fn is_retryable(&self) -> bool {
        matches!(self, VqsError::Storage(_))
    }
}
