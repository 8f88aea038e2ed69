use thiserror::Error;

pub type Result<T> = std::result::Result<T, NucError>;

#[derive(Debug, Error)]
pub enum NucError {
    #[error("invalid dimensions {height}x{width}: {reason}")]
    InvalidDimensions {
        height: usize,
        width: usize,
        reason: &'static str,
    },

    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("non-positive gain {value} at ({row}, {col})")]
    NonPositiveGain { row: usize, col: usize, value: f64 },

    #[error("offset map is {found}, expected {expected}")]
    OffsetKind {
        expected: &'static str,
        found: &'static str,
    },

    #[error("no difference samples to aggregate")]
    EmptySamples,

    #[error("difference samples mix horizontal and vertical axes")]
    MixedAxes,

    #[error("shift ({dx}, {dy}) exceeds the 4 pixel bound")]
    ShiftOutOfBounds { dx: f64, dy: f64 },

    #[error("grid of {cells} cells exceeds the dense solver limit of {limit}")]
    SizeExceeded { cells: usize, limit: usize },

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate input: {0}")]
    Degenerate(&'static str),

    #[error("malformed {kind} data: {reason}")]
    Format { kind: &'static str, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl NucError {
    pub(crate) fn format(kind: &'static str, reason: impl Into<String>) -> Self {
        NucError::Format {
            kind,
            reason: reason.into(),
        }
    }
}
