use nalgebra::DMatrix;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty input")]
    Empty,

    #[error("matrix is not symmetric/hermitian (max deviation {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not positive definite (smallest eigenvalue {0:e})")]
    NotPositiveDefinite(f64),

    #[error("non-finite value in input")]
    NonFinite,

    #[error("matrix has deficient column rank")]
    RankDeficient,

    #[error("invalid quantum state: {0}")]
    InvalidState(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("linear system is singular; add regularization")]
    Singular,

    #[error("outcome {0} has zero probability")]
    ZeroProbability(usize),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        last: Box<DMatrix<f64>>,
    },

    #[error("training diverged at epoch {epoch}")]
    Divergence { epoch: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by a value that parsed fine but violates a
    /// mathematical invariant (non-SPD matrix, unnormalized state, ...).
    pub fn is_invariant_violation(&self) -> bool {
        matches!(
            self,
            Error::NotSymmetric(_)
                | Error::NotPositiveDefinite(_)
                | Error::RankDeficient
                | Error::InvalidState(_)
                | Error::NonFinite
        )
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
