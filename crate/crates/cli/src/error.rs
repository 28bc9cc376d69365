use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Config(String),
}

impl CliError {
    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 2,
            CliError::Config(_) => 3,
        }
    }
}

impl From<lppl_bubble::Error> for CliError {
    fn from(err: lppl_bubble::Error) -> Self {
        use lppl_bubble::Error as E;
        match err {
            E::Io { .. } => CliError::Io(err.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}
