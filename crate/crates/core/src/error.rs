use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("enumeration budget exceeded: 2^{support} sign patterns exceed 2^20")]
    EnumerationBudget { support: usize },
    #[error("quadrature budget violated: {nodes} nodes for support width {width} (need >= {required})")]
    QuadratureBudget {
        nodes: usize,
        width: usize,
        required: usize,
    },
    #[error("weight overflow: {0:e} exceeds 1e300")]
    Overflow(f64),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("solver did not converge; best value {best}")]
    NonConvergence { best: f64 },
    #[error("unknown suite: {0}")]
    UnknownSuite(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
