use thiserror::Error;

use crate::variation::CmWitness;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported operation: {0}")]
    UnsupportedOperation(String),

    #[error("unsupported input: {0}")]
    UnsupportedInput(String),

    /// The function handed to a construction that needs complete monotonicity
    /// failed the ladder check.
    #[error("precondition violated: {message}")]
    PreconditionViolation {
        message: String,
        witness: Option<Box<CmWitness>>,
    },

    #[error("resource limit: {message} (suggestion: {suggestion})")]
    ResourceLimit { message: String, suggestion: String },

    #[error("unknown name `{name}`; did you mean one of: {}", suggestions.join(", "))]
    NotFound {
        name: String,
        suggestions: Vec<String>,
    },

    #[error("family/discrepancy mismatch: {0}")]
    FamilyMismatch(String),

    /// A certified inequality failed. This is a bug signal, not a user error.
    #[error("certified inequality violated: {0}")]
    InequalityViolation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable tag, used by the CLI's error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::DimensionMismatch { .. } => "invalid-argument",
            Error::UnsupportedOperation(_) => "unsupported-operation",
            Error::UnsupportedInput(_) => "unsupported-input",
            Error::PreconditionViolation { .. } => "precondition-violation",
            Error::ResourceLimit { .. } => "resource-limit",
            Error::NotFound { .. } => "not-found",
            Error::FamilyMismatch(_) => "family-mismatch",
            Error::InequalityViolation(_) => "inequality-violation",
            Error::Parse(_) => "parse-error",
            Error::Io(_) => "io-error",
            Error::Json(_) => "json-error",
            Error::Csv(_) => "csv-error",
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
