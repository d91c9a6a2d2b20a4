use thiserror::Error;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{origin}: key `{key}`: {message}")]
    Parse {
        origin: String,
        key: String,
        message: String,
    },
    #[error("invalid arguments: {0}")]
    Usage(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Usage(_) | CliError::Io { .. } => EXIT_PARSE,
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
        }
    }
}

impl From<guardzone::Error> for CliError {
    fn from(e: guardzone::Error) -> Self {
        match e {
            guardzone::Error::InfeasiblePacking { .. } => CliError::Infeasible(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}
