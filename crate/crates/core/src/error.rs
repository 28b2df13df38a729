use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("gate {0} has no shift rule for a differentiated slot")]
    UnsupportedGate(String),

    #[error("optimization aborted: non-finite objective (best f = {f_best})")]
    OptimizationAborted { x_best: Vec<f64>, f_best: f64 },

    #[error("ill-conditioned kernel: {0}")]
    IllConditionedKernel(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("no feature met the selection rule")]
    EmptySelection,

    #[error("degenerate scale for column `{0}`")]
    DegenerateScale(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
