use thiserror::Error;

/// Errors produced by the estimators, diagnostics and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("instance carries no ground truth (beta_star, eta)")]
    MissingTruth,

    #[error("estimation failed: {0}")]
    EstimationFailure(String),

    #[error("matrix is singular or rank deficient: {0}")]
    SingularMatrix(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("precondition not satisfied: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable code used on the command line and across the C ABI.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::ShapeMismatch(_) => "shape-mismatch",
            Error::MissingTruth => "missing-truth",
            Error::EstimationFailure(_) => "estimation-failure",
            Error::SingularMatrix(_) => "singular-matrix",
            Error::NotPositiveDefinite(_) => "not-positive-definite",
            Error::Precondition(_) => "precondition",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::ShapeMismatch(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
