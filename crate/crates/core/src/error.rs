use thiserror::Error;

/// Errors surfaced by instance construction, loaders and estimators.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("instance is not coverable: element {0} is in no eligible set")]
    Uncoverable(usize),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
