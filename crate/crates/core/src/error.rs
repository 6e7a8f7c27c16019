use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid book: {0}")]
    InvalidBook(String),

    #[error("duplicate book id `{0}` in metadata")]
    DuplicateId(String),

    #[error("invalid metadata at line {line}: {message}")]
    InvalidMetadata { line: usize, message: String },

    #[error("cannot build a distribution: {0}")]
    EmptyDistribution(String),

    #[error("n-gram order mismatch: {left} vs {right}")]
    OrderMismatch { left: u8, right: u8 },

    #[error("unsupported n-gram order {0} (expected 1 or 2)")]
    UnsupportedOrder(u8),

    #[error("epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),

    #[error("unsupported language `{0}`")]
    UnsupportedLanguage(String),

    #[error("invalid language registry: {0}")]
    InvalidRegistry(String),

    #[error("invalid dialogue: {0}")]
    InvalidDialogue(String),

    #[error("invalid pipeline config: {0}")]
    InvalidConfig(String),

    #[error("requested {requested} samples but only {available} are available")]
    SampleTooLarge { requested: usize, available: usize },

    #[error("invalid annotation label: {0}")]
    InvalidLabel(String),

    #[error("nothing to evaluate: {0}")]
    EmptyEval(String),

    #[error("invalid evaluation input: {0}")]
    InvalidEvalInput(String),

    #[error("invalid embeddings: {0}")]
    InvalidEmbeddings(String),

    #[error("malformed dataset file {path}: {message}")]
    MalformedDataset { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidBook(_) => "invalid_book",
            Error::DuplicateId(_) => "duplicate_id",
            Error::InvalidMetadata { .. } => "invalid_metadata",
            Error::EmptyDistribution(_) => "empty_distribution",
            Error::OrderMismatch { .. } => "order_mismatch",
            Error::UnsupportedOrder(_) => "unsupported_order",
            Error::InvalidEpsilon(_) => "invalid_epsilon",
            Error::UnsupportedLanguage(_) => "unsupported_language",
            Error::InvalidRegistry(_) => "invalid_registry",
            Error::InvalidDialogue(_) => "invalid_dialogue",
            Error::InvalidConfig(_) => "invalid_config",
            Error::SampleTooLarge { .. } => "sample_too_large",
            Error::InvalidLabel(_) => "invalid_label",
            Error::EmptyEval(_) => "empty_eval",
            Error::InvalidEvalInput(_) => "invalid_eval_input",
            Error::InvalidEmbeddings(_) => "invalid_embeddings",
            Error::MalformedDataset { .. } => "malformed_dataset",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
