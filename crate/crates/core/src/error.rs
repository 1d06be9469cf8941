use thiserror::Error;

/// Errors produced by the fracflow pipeline stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,
    #[error("empty result")]
    EmptyResult,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("column `{0}` has no observed values")]
    EmptyColumn(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("ambiguous dictionary: `{token}` is equally close to `{first}` and `{second}`")]
    AmbiguousDictionary {
        token: String,
        first: String,
        second: String,
    },
    #[error("inconsistent stage group")]
    InconsistentStageGroup,
    #[error("missing key source")]
    MissingKeySource,
    #[error("negative input to NNMF (column `{0}`)")]
    NegativeInput(String),
    #[error("undefined R² (constant target)")]
    UndefinedR2,
    #[error("early stopping requires validation data")]
    MissingValidation,
    #[error("degenerate column")]
    DegenerateColumn,
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for errors caused by bad user input rather than an internal failure.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
