use std::path::PathBuf;

use thiserror::Error;

/// Failures of a CLI run, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}:{line}: {message}")]
    Config {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Compute(#[from] lmg_gmc::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed {what}: {message}")]
    Malformed { what: &'static str, message: String },

    #[error("oracle check failed: {0} mismatches")]
    OracleMismatch(usize),
}

impl CliError {
    pub const EXIT_VALIDATION: u8 = 1;
    pub const EXIT_COMPUTE: u8 = 2;
    pub const EXIT_ORACLE: u8 = 3;

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => Self::EXIT_VALIDATION,
            CliError::Compute(e) if is_validation(e) => Self::EXIT_VALIDATION,
            CliError::Compute(_) | CliError::Io { .. } | CliError::Malformed { .. } => {
                Self::EXIT_COMPUTE
            }
            CliError::OracleMismatch(_) => Self::EXIT_ORACLE,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

fn is_validation(e: &lmg_gmc::Error) -> bool {
    use lmg_gmc::Error as E;
    match e {
        E::InvalidParams(_)
        | E::BlockOutOfRange { .. }
        | E::InvalidGrid(_)
        | E::TooLarge { .. }
        | E::InsufficientData(_) => true,
        E::AtField { source, .. } => is_validation(source),
        _ => false,
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
