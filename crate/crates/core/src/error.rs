use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate document id `{0}`")]
    DuplicateId(String),

    #[error("document `{0}` has no label")]
    Unlabeled(String),

    #[error("class {0} has too few documents for a stratified split")]
    EmptyClass(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("no score for document `{doc}` in classifier `{classifier}`")]
    MissingScore { doc: String, classifier: String },

    #[error("score file row {row}: {message}")]
    ScoreRow { row: usize, message: String },

    #[error("classifier order mismatch: expected {expected:?}, got {got:?}")]
    ClassifierOrder {
        expected: Vec<String>,
        got: Vec<String>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
