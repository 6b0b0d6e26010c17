use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (max |A - A^dag| = {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("matrix is not special unitary: {0}")]
    NotSpecialUnitary(String),

    #[error("non-finite fidelity encountered at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
