use std::path::PathBuf;

use translum::fus::FusError;
use translum::ConfigError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write {}: {source}", path.display())]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no signal: {0}")]
    NoSignal(String),
    #[error(transparent)]
    Unsafe(FusError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Output { .. } => 2,
            CliError::NoSignal(_) => 3,
            CliError::Unsafe(_) => 4,
        }
    }
}

impl From<FusError> for CliError {
    fn from(e: FusError) -> Self {
        match e {
            FusError::Unsafe { .. } => CliError::Unsafe(e),
            other => CliError::Usage(other.to_string()),
        }
    }
}
