use lanchester_core::Error as ModelError;
use lanchester_io::IoError;

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags or an invalid scenario (exit 1).
    #[error("{0}")]
    Usage(String),
    /// Integration or output failure (exit 2).
    #[error("{0}")]
    Runtime(String),
    /// `corridor --verify` found a violation (exit 3).
    #[error("{0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::Verification(_) => 3,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::StepLimit(_) | ModelError::NonFiniteRhs(_) | ModelError::StepSizeUnderflow(_) => {
                CliError::Runtime(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Parse(_) | IoError::Validation(_) => CliError::Usage(e.to_string()),
            IoError::Model(m) => m.into(),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
