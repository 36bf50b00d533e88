use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Inputs that violate a documented precondition (bad probabilities, non-finite logits, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A dataset or experiment configuration that cannot be honoured.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("model has not been fitted")]
    NotFitted,

    #[error("pool exhausted: no subjects left to transfer")]
    PoolExhausted,

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("subject {subject} carries conflicting labels {first} and {second}")]
    ConflictingLabels {
        subject: String,
        first: usize,
        second: usize,
    },

    #[error("duplicate instance id {0}")]
    DuplicateInstance(u64),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("i/o error: {0}")]
    Io(String),

    /// An error raised while scoring a specific instance.
    #[error("instance {instance_id}: {source}")]
    AtInstance {
        instance_id: u64,
        #[source]
        source: Box<Error>,
    },

    /// An error raised inside one experiment of a suite.
    #[error("experiment '{label}' (seed {seed}): {source}")]
    InRun {
        label: String,
        seed: u64,
        #[source]
        source: Box<Error>,
    },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
