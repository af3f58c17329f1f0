use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INTERNAL: i32 = 1;
    pub const INPUT: i32 = 2;
    pub const UNBOUNDED: i32 = 3;
    pub const CAP: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] qcmdo_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use qcmdo_core::Error as E;
        match self {
            CliError::Io { .. } | CliError::Format { .. } | CliError::Usage(_) => exit::INPUT,
            CliError::Core(E::UnboundedBelow { .. } | E::UnboundedLinear { .. }) => exit::UNBOUNDED,
            CliError::Core(E::QubitCapExceeded { .. }) => exit::CAP,
            CliError::Core(E::EigensolverFailure(_) | E::SolverFailure { .. }) => exit::INTERNAL,
            CliError::Core(_) => exit::INPUT,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
