use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("unknown function {0:?}; run `setcalc catalog` for the list")]
    UnknownFunction(String),
    #[error("bad configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Core(#[from] setcalc::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::UnknownFunction(_) => 2,
            CliError::BadConfig(_) => 3,
            CliError::Core(setcalc::Error::NotConverged { .. }) => 4,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
