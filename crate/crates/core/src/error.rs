use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("view index {index} out of range ({len} views)")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("orthogonality constraints violated: max residual {residual:e} exceeds tolerance {tol:e}")]
    ConstraintViolated { residual: f64, tol: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid rank: {0}")]
    InvalidRank(String),

    #[error("operation not supported in {0} mode")]
    UnsupportedMode(&'static str),

    #[error("regularization parameter must be non-negative, got {0}")]
    NegativeLambda(f64),

    #[error("nonzero count {count} out of range 1..={p}")]
    CountOutOfRange { count: usize, p: usize },

    #[error("infeasible sampling: {0}")]
    InfeasibleSampling(String),

    #[error("{}: line {line}, column {column}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error(
        "views disagree on variables: only in first view {only_in_first:?}, only in view {view} {only_in_other:?}"
    )]
    VariableMismatch {
        view: usize,
        only_in_first: Vec<String>,
        only_in_other: Vec<String>,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line tool: 3 for data errors,
    /// 4 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_)
            | Error::Degenerate(_)
            | Error::ConstraintViolated { .. } => 4,
            _ => 3,
        }
    }
}
