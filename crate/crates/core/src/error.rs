use alloc::string::String;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An iterative routine hit its iteration cap.
    #[error("numerical failure: {0}")]
    NumericalFailure(&'static str),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// Entry in a matrix was NaN or infinite.
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("invalid matrix product state: {0}")]
    InvalidState(String),

    /// Realizing the state would need more than the allowed number of amplitudes.
    #[error("state of {sites} sites with local dimension {local_dim} exceeds the size cap")]
    SizeCap { sites: usize, local_dim: usize },

    #[error("state vanishes identically")]
    ZeroState,

    #[error("non-convergent: {0}")]
    NonConvergent(&'static str),

    #[error("unsupported case: {0}")]
    Unsupported(&'static str),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("preset `{name}` takes {expected} parameter(s), got {found}")]
    ParameterCount {
        name: &'static str,
        expected: usize,
        found: usize,
    },
}

pub type Result<T> = core::result::Result<T, Error>;
