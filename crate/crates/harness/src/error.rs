use resilient_te::Error as CoreError;

/// Errors raised by file handling, generators and the CLI drivers.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("cannot access `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed instance file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported schema `{found}`, expected `{expected}`")]
    Schema { found: String, expected: &'static str },
    #[error("instance is invalid: {0}")]
    Invalid(String),
    #[error("topology is disconnected: {0}")]
    Disconnected(String),
    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl HarnessError {
    /// Stable machine-readable code printed by the CLI.
    pub fn code(&self) -> &'static str {
        match self {
            HarnessError::Io { .. } => "IO_ERROR",
            HarnessError::Parse(_) => "PARSE_ERROR",
            HarnessError::Schema { .. } => "SCHEMA_VERSION",
            HarnessError::Invalid(_) => "INVALID_INSTANCE",
            HarnessError::Disconnected(_) => "DISCONNECTED",
            HarnessError::UnknownFixture(_) => "UNKNOWN_FIXTURE",
            HarnessError::Csv(_) => "CSV_ERROR",
            HarnessError::Core(e) => e.code(),
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
