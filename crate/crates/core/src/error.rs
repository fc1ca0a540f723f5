use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("schema violation: {0}")]
    Schema(String),

    #[error("non-increasing time at row {row}: {prev} -> {next}")]
    NonIncreasingTime { row: usize, prev: f64, next: f64 },

    #[error("time {t} outside [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("singular: {0}")]
    Singular(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("ill-conditioned finite difference: {0}")]
    IllConditioned(String),

    #[error("simulation diverged at t = {t:.3} s: {detail}")]
    Diverged { t: f64, detail: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
