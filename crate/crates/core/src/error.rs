use thiserror::Error;

/// Errors produced by the solver suite.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{function}({x}) is outside the supported range [{min}, {max}]")]
    Range {
        function: &'static str,
        x: f64,
        min: f64,
        max: f64,
    },

    #[error("negative power of a vanishing derivative (epsilon = {epsilon})")]
    SingularPower { epsilon: f64 },

    #[error("non-integer epsilon = {epsilon} requires a complex carrier")]
    CarrierMismatch { epsilon: f64 },

    #[error("solution blew up at t = {time}: {detail}")]
    BlowUp { time: f64, detail: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("malformed profile: {0}")]
    MalformedProfile(String),

    #[error("no emergent solitary wave: {0}")]
    NoWave(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
