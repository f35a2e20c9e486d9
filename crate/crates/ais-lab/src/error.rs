use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    #[error("feature set not closed: {0}")]
    Closure(String),

    #[error("codebook consistency: read an undefined entry at {0}")]
    Codebook(String),

    #[error("kernel validity: {0}")]
    KernelValidity(String),

    #[error("schedule condition violated: {0}")]
    Schedule(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("bound violated: {0}")]
    BoundViolation(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
