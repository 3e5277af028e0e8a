use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    #[error("index {index} out of range for {what} of size {len}")]
    Index {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("parameter `{0}` has no gradient")]
    MissingGradient(String),

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("batch normalization in training mode needs a batch of at least 2, got {0}")]
    BatchTooSmall(usize),

    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),

    #[error("tracing rejected: {0}")]
    Rejected(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown letter {0:?}")]
    UnknownLetter(char),

    #[error("unknown writer `{0}`")]
    UnknownWriter(String),

    #[error("bias dimension mismatch: expected {expected}, got {actual}")]
    BiasDimension { expected: usize, actual: usize },

    #[error("bias kind mismatch: model expects {expected}, data provides {actual}")]
    BiasKind { expected: String, actual: String },

    #[error("model is not trained: {0}")]
    Untrained(&'static str),

    #[error("constant input: {0}")]
    ConstantInput(&'static str),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable machine-readable category, used for CLI exit reporting.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Shape { .. } | Error::Index { .. } | Error::BiasDimension { .. } => "dimension",
            Error::MissingGradient(_)
            | Error::UnknownParameter(_)
            | Error::BatchTooSmall(_)
            | Error::NonFinite(_) => "numerics",
            Error::InvalidTrajectory(_)
            | Error::Rejected(_)
            | Error::UnknownLetter(_)
            | Error::UnknownWriter(_)
            | Error::InsufficientData(_)
            | Error::ConstantInput(_)
            | Error::InvalidInput(_) => "data",
            Error::Format(_) => "format",
            Error::BiasKind { .. } | Error::Untrained(_) | Error::Config(_) => "config",
            Error::Io { .. } => "io",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.category() {
            "config" => 2,
            "io" => 3,
            "format" => 4,
            "data" => 5,
            "dimension" => 6,
            _ => 7,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(op: &'static str, left: &[usize], right: &[usize]) -> Self {
        Error::Shape {
            op,
            left: left.to_vec(),
            right: right.to_vec(),
        }
    }
}
