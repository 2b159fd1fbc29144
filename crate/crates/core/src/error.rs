use thiserror::Error;

/// Crate-wide error type.
#[derive(Error, Debug)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("no token survived the min_count threshold; vocabulary is empty")]
    EmptyVocabulary,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("line {line}: {msg}")]
    MalformedLine { line: usize, msg: String },

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        got: usize,
    },

    #[error("conflicting labels for id {0}")]
    ConflictingLabel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("training pair touches the reserved padding row")]
    PaddingRowTouched,

    #[error("sequence for {doc} has {len} tokens, exceeding the cap of {max}")]
    SequenceTooLong { doc: String, len: usize, max: usize },

    #[error("missing artifact or key: {0}")]
    Missing(String),

    #[error("zero-norm vector in cosine similarity")]
    ZeroNorm,

    #[error("no skip-gram pairs could be generated from the corpus")]
    EmptyPairSet,

    #[error("training set contains a single class; both classes are required")]
    SingleClass,

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("malformed graph: {0}")]
    Graph(String),
}

pub type Result<T> = std::result::Result<T, Error>;
