use thiserror::Error;

use crate::model::ModelKind;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} features, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("feature index {index} out of range for {dim} features")]
    FeatureIndex { index: usize, dim: usize },

    #[error("model kind {0} has no score functions")]
    Scoreless(ModelKind),

    #[error("non-finite score produced by {0}")]
    NonFiniteScore(ModelKind),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("record {index}: indecision response in a strict dataset")]
    IndecisionInStrict { index: usize },

    #[error("a strict dataset requires a strict-response policy")]
    MissingPolicy,

    /// A record has probability zero under the model; its log-likelihood is
    /// minus infinity.
    #[error("record {index} has zero probability under the model")]
    ZeroProbability { index: usize },

    #[error("every candidate assigned zero probability to some training record")]
    NoViableCandidate,

    #[error("sobol dimension {requested} exceeds the supported maximum of {max}")]
    SobolDimension { requested: usize, max: usize },

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Whether the error stems from invalid user input rather than a failure
    /// while running.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::Io(_) | Error::NoViableCandidate | Error::NonFiniteScore(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
