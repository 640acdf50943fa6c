use thiserror::Error;

/// Errors raised by the solvers and their builders.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch in {op}: expected {expected:?}, got {got:?}")]
    Shape {
        op: &'static str,
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("invalid matrix data: {0}")]
    InvalidData(String),

    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("Jacobi SVD did not converge after {sweeps} sweeps (largest off-diagonal cosine {max_cosine:e})")]
    SvdNoConvergence { sweeps: usize, max_cosine: f64 },

    #[error("matrix is singular to working precision")]
    Singular,

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("invalid property set: {0}")]
    InvalidProperties(String),

    #[error("invalid block set: {0}")]
    InvalidBlocks(String),

    #[error("invalid variant '{0}'")]
    InvalidVariant(String),

    #[error("malformed LP: {0}")]
    MalformedLp(String),

    #[error("LP solver failed numerically: {0}")]
    Numerical(String),

    #[error("invalid instance spec: {0}")]
    InvalidInstance(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("I/O error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
