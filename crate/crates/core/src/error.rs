use std::path::PathBuf;

use crate::params::ParamError;

/// Numerical failures. Each variant carries enough context to diagnose the
/// offending parameter point.
#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("degenerate parameters: {0}")]
    Degenerate(String),
    #[error("mode {mode} is above lasing threshold: effective damping {damping:e} rad/s <= 0")]
    AboveThreshold { mode: usize, damping: f64 },
    #[error("adiabatic elimination invalid: {0}")]
    EliminationUnstable(String),
    #[error("drift matrix is not stable: {0}")]
    NotStable(String),
    #[error("unphysical covariance: {0}")]
    UnphysicalCovariance(String),
    #[error("continuation step rejected too often: {0}")]
    StepSize(String),
    #[error("root scan found nothing: {0}")]
    NoRoots(String),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid sweep: {0}")]
    Spec(String),
    #[error("corrupt data file {}: {reason}", path.display())]
    Format { path: PathBuf, reason: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 validation, 2 solver, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Param(_) | Error::Spec(_) => 1,
            Error::Solver(_) => 2,
            Error::Io { .. } | Error::Format { .. } => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
