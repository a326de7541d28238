//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not unitary (max residual {residual:.3e}, tolerance {tol:.1e})")]
    NotUnitary { residual: f64, tol: f64 },

    #[error("Gram matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("visibility undefined for input pair ({i},{j}) and output pair ({k},{l}): classical coincidence probability is zero")]
    UndefinedVisibility {
        i: usize,
        j: usize,
        k: usize,
        l: usize,
    },

    #[error("inconsistent measurement data: {0}")]
    InconsistentData(String),

    #[error("singular detector response: {0}")]
    SingularResponse(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
