use std::io;

/// Errors raised by the measurement toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("loss data set is empty")]
    EmptyData,

    #[error("divergence at step {step}: {quantity} = {value:e}")]
    Divergence {
        step: usize,
        quantity: &'static str,
        value: f64,
    },

    #[error("trajectory bound exceeded at step {step}: |theta| = {norm:e} > R = {bound:e}")]
    TrajectoryBound { step: usize, norm: f64, bound: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("window needs at least 2 checkpoints, got {0}")]
    WindowTooShort(usize),

    #[error("window precondition failed: {0}")]
    WindowPrecondition(String),

    #[error("target spectrum vanishes at peak bin {0}")]
    ZeroPeak(i64),

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("malformed trajectory file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
