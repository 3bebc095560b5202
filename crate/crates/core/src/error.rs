use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("grid mismatch: expected n={expected}, found n={found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("invalid grid size {0} (need n >= 3)")]
    InvalidGrid(usize),

    #[error("expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("boundary data required for boundary-aware encoding")]
    MissingBoundary,

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("relative error undefined: reference field has zero norm")]
    ZeroNorm,

    #[error("format error: {0}")]
    Format(String),

    #[error("checksum mismatch in {0}")]
    Checksum(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl LabError {
    /// Short stable tag for machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            LabError::GridMismatch { .. } | LabError::InvalidGrid(_) => "grid",
            LabError::LengthMismatch { .. } | LabError::ShapeMismatch(_) => "shape",
            LabError::NonFinite(_) => "non_finite",
            LabError::InvalidConfig(_) => "config",
            LabError::MissingBoundary => "missing_boundary",
            LabError::EmptyDataset | LabError::Empty(_) => "empty",
            LabError::ZeroNorm => "zero_norm",
            LabError::Format(_) => "format",
            LabError::Checksum(_) => "checksum",
            LabError::Io(_) => "io",
            LabError::Json(_) => "json",
            LabError::Csv(_) => "csv",
        }
    }
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
