use std::path::{Path, PathBuf};

use nlddm_core::Error as CoreError;

/// Pipeline failure, grouped by the exit code it maps to.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("coverage check failed: {0}")]
    Coverage(CoreError),
    #[error("solver failure: {0}")]
    Solver(CoreError),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
}

pub type RunResult<T> = Result<T, RunError>;

impl RunError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        RunError::Io { path: path.to_path_buf(), source }
    }

    pub fn format(path: &Path, reason: impl Into<String>) -> Self {
        RunError::Format { path: path.to_path_buf(), reason: reason.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Coverage(_) => 3,
            RunError::Solver(_) => 4,
            RunError::Invariant(_) => 5,
            RunError::Io { .. } | RunError::Format { .. } => 6,
        }
    }
}

impl From<CoreError> for RunError {
    fn from(e: CoreError) -> Self {
        use CoreError::*;
        match e {
            InvalidMeshParameters(_)
            | InvalidKernel(_)
            | InvalidQuadratureOrder(_)
            | EmptyBlock { .. }
            | InvalidPartition(_)
            | CollarDeficiency { .. }
            | RedundantKkt => RunError::Config(e.to_string()),
            CoverageViolation { .. } | CoverageNotVerified => RunError::Coverage(e),
            NotSpd { .. } | NoConvergence { .. } | SingularKkt { .. } | ResidualTooLarge { .. } => RunError::Solver(e),
            _ => RunError::Invariant(e.to_string()),
        }
    }
}
