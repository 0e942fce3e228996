use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Stream(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid scenario: {0}")]
    Validation(String),
    #[error("serialization failed: {0}")]
    Serialize(String),
    #[error(transparent)]
    Model(#[from] lanchester_core::Error),
}

pub type Result<T> = std::result::Result<T, IoError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(IoError::Validation(msg.into()))
}
