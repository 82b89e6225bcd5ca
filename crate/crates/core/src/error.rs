use thiserror::Error;

#[derive(Debug, Error)]
pub enum QpvError {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("matrix is not Hermitian (asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:e})")]
    NotPositive { eigenvalue: f64 },

    #[error("{what} is not an isometry (residual {residual:e})")]
    NotIsometry { what: String, residual: f64 },

    #[error("zero vector where a direction is required")]
    ZeroVector,

    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("dimension {dim} exceeds the cap of {cap}")]
    DimCap { dim: usize, cap: usize },

    #[error("integer overflow evaluating {0}")]
    Overflow(String),

    #[error("no isometry U_P supplied for basis {0}")]
    MissingUnitary(String),

    #[error("no decoders supplied for basis {0}")]
    MissingDecoders(String),

    #[error("invalid projector syntax {0:?}")]
    ProjectorSyntax(String),

    #[error("invalid value for `{key}`: {reason}")]
    InvalidField { key: String, reason: String },

    #[error("Lambda pairs come from different channels")]
    MixedChannels,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = QpvError> = std::result::Result<T, E>;

impl QpvError {
    pub(crate) fn field(key: impl Into<String>, reason: impl ToString) -> Self {
        QpvError::InvalidField {
            key: key.into(),
            reason: reason.to_string(),
        }
    }
}
