use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the solvers, the shift strategies and the I/O layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("shifted matrix is singular for shift {alpha}")]
    SingularShift { alpha: Complex64 },

    #[error("matrix is singular: {0}")]
    Singular(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-real value {0} has no conjugate partner")]
    UnpairedShift(Complex64),

    #[error("no stable shift candidates available")]
    NoStableShifts,

    #[error("eigenvalue computation did not converge")]
    Eigen,

    #[error("iteration did not converge: {0}")]
    NonConvergence(String),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("bundle error: {0}")]
    Bundle(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_err(msg: impl Into<String>) -> Error {
    Error::Dimension(msg.into())
}
