use ecmgrid_core::Error as CoreError;
use thiserror::Error;

/// CLI failure, carrying its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{0}")]
    Combinatorial(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Validation(_) | CliError::Io(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Combinatorial(_) => 5,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::InvalidArgument(_) | CoreError::DegenerateDirection => CliError::Usage(msg),
            CoreError::InvalidNetwork(_)
            | CoreError::ModelInconsistency(_)
            | CoreError::DegenerateEquilibrium(_)
            | CoreError::Dimension(_) => CliError::Validation(msg),
            CoreError::NonFinite(_)
            | CoreError::Numerical(_)
            | CoreError::Unstable { .. }
            | CoreError::NotPositiveDefinite
            | CoreError::DivisionDegeneracy(_) => CliError::Numerical(msg),
            CoreError::CombinatorialRefusal { .. } => CliError::Combinatorial(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
