use thiserror::Error;

use crate::lp::LpStatus;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid scale factor {0}: must be positive and finite")]
    InvalidScale(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("polyhedron is unbounded")]
    Unbounded,

    #[error("polyhedron is empty")]
    Empty,

    #[error("refusing {op} in dimension {dim} (cap is {cap})")]
    CapExceeded {
        op: &'static str,
        dim: usize,
        cap: usize,
    },

    #[error("LP solver reported {status:?} while {context}")]
    Solver {
        status: LpStatus,
        context: &'static str,
    },

    #[error("matrix power A^{power} is not finite or too large (inf-norm {norm:e})")]
    Conditioning { power: usize, norm: f64 },

    #[error("dynamics matrix A is singular or ill-conditioned (cond estimate {0:e})")]
    SingularDynamics(f64),

    #[error("invalid problem data: {0}")]
    InvalidProblem(String),

    #[error("fixed-point iteration did not converge in {0} iterations")]
    NonConvergence(usize),

    #[error("rejection sampling gave up after {attempts} attempts ({accepted} of {wanted} blocks accepted)")]
    RejectionBudget {
        attempts: usize,
        accepted: usize,
        wanted: usize,
    },

    #[error("bracket expansion failed: point at r = {0} still inside the set")]
    Bracket(f64),

    #[error("schema error: {0}")]
    Schema(String),
}

impl Error {
    pub(crate) fn solver(status: LpStatus, context: &'static str) -> Self {
        Error::Solver { status, context }
    }
}
