use qca_core::QcaError;
use thiserror::Error;

/// Process exit codes.
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_SEMANTIC: i32 = 3;
pub const EXIT_RESOURCE: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid JSON in {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] QcaError),
    #[error("verification failed: {}", .0.join(", "))]
    Verification(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => EXIT_VERIFY,
            CliError::Read { .. } | CliError::Json { .. } | CliError::Input(_) => EXIT_PARSE,
            CliError::Core(QcaError::Parse(_)) => EXIT_PARSE,
            CliError::Core(QcaError::MemoryGuard { .. }) => EXIT_RESOURCE,
            CliError::Write { .. } | CliError::Config(_) | CliError::Core(_) => EXIT_SEMANTIC,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
