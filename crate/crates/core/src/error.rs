//! Crate-wide error type and its mapping to process exit codes.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("undominated read: {0}")]
    Undominated(String),
    #[error("not first-order optimal: identity residual {residual:e}")]
    NotFirstOrderOptimal { residual: f64 },
    #[error("no convergence after {iterations} iterations ({detail})")]
    Convergence { iterations: usize, detail: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("conditional-type sampler infeasible at row {row}: {detail}")]
    Infeasible { row: usize, detail: String },
    #[error("enumeration bound exceeded: {size} > {limit}")]
    EnumerationBound { size: f64, limit: f64 },
    #[error("consistency check failed: {0}")]
    Check(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code: 2 validation/domain, 3 convergence, 4 enumeration
    /// bound, 1 failed checks and I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_)
            | Error::Shape(_)
            | Error::Domain(_)
            | Error::Undominated(_)
            | Error::NotFirstOrderOptimal { .. }
            | Error::Unsupported(_)
            | Error::Infeasible { .. }
            | Error::Json(_) => 2,
            Error::Convergence { .. } => 3,
            Error::EnumerationBound { .. } => 4,
            Error::Check(_) | Error::Io(_) | Error::Csv(_) => 1,
        }
    }
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
