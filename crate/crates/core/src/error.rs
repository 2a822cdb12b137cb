use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input space: {0}")]
    InvalidSpace(String),

    #[error("point outside the input box in dimension {dim} ({name}): {value} not in [{lower}, {upper}]")]
    OutOfDomain {
        dim: usize,
        name: String,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid design data: {0}")]
    InvalidData(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("need at least {required} samples, got {got}")]
    TooFewSamples { required: usize, got: usize },

    #[error("kernel matrix is numerically singular even with jitter {jitter:e}; remove duplicate or near-duplicate points")]
    SingularKernel { jitter: f64 },

    #[error("degenerate model: {0}")]
    Degenerate(String),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("fit failed on fold {fold}: {source}")]
    FoldFit {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("evaluation failed: {message}")]
    Evaluation { message: String, output: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub(crate) fn evaluation(message: impl Into<String>) -> Self {
        Error::Evaluation {
            message: message.into(),
            output: String::new(),
        }
    }
}
