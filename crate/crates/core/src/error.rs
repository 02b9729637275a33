use thiserror::Error;

use crate::basis::FockState;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not symmetric: |a[{row}][{col}] - a[{col}][{row}]| = {deviation:e}")]
    NotSymmetric {
        row: usize,
        col: usize,
        deviation: f64,
    },

    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("eigenvalue {index} did not converge after {iterations} iterations")]
    NoConvergence { index: usize, iterations: usize },

    #[error("state ({}, {}) is not in the basis", .0.n1, .0.n2)]
    UnknownState(FockState),

    #[error("state is not normalized: |psi|^2 = {0}")]
    NotNormalized(f64),

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("ladder word needs shell {needed} but the basis stops at shell {max_shell}")]
    Truncation { needed: usize, max_shell: usize },

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("coefficient block is rank deficient (max |U U^T - I| = {0:e})")]
    RankDeficient(f64),

    #[error("ill-conditioned fit: {0}")]
    IllConditioned(String),

    #[error("config: {0}")]
    Config(String),

    #[error("numerical identity failed: {0}")]
    IdentityFailure(String),

    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code: 1 validation, 2 numerical identity, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Stage { source, .. } => source.exit_code(),
            Error::IdentityFailure(_) => 2,
            Error::Io { .. } => 3,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
