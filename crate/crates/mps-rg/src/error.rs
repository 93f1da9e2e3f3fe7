use std::fmt;

use mps_rg_core::Error as CoreError;

/// Process exit status classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Numerical = 1,
    InvalidInput = 2,
    NonConvergent = 3,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub message: String,
}

impl CliError {
    pub fn invalid(message: impl Into<String>) -> Self {
        Self {
            kind: ExitKind::InvalidInput,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self {
            kind: ExitKind::Numerical,
            message: message.into(),
        }
    }

    pub fn code(&self) -> i32 {
        self.kind as i32
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let kind = match e {
            CoreError::NumericalFailure(_) | CoreError::Unsupported(_) => ExitKind::Numerical,
            CoreError::NonConvergent(_) => ExitKind::NonConvergent,
            CoreError::DimensionMismatch { .. }
            | CoreError::NonFinite { .. }
            | CoreError::Domain(_)
            | CoreError::InvalidState(_)
            | CoreError::SizeCap { .. }
            | CoreError::ZeroState
            | CoreError::UnknownPreset(_)
            | CoreError::ParameterCount { .. } => ExitKind::InvalidInput,
        };
        Self {
            kind,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::invalid(format!("io: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::invalid(format!("csv: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
