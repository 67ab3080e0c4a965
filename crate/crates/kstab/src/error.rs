use thiserror::Error;

/// Errors raised across the crate. Each maps onto a stable process exit code.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty polytope")]
    EmptyPolytope,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("infeasible")]
    Infeasible,
    #[error("unbounded")]
    Unbounded,
    #[error("not convex: {0}")]
    NotConvex(String),
    #[error("not semipositive: {0}")]
    NotSemipositive(String),
    #[error("not anticanonical")]
    NotAnticanonical,
    #[error("non-smooth cone at vertex {0}")]
    NonSmoothCone(usize),
    #[error("integrality: {0}")]
    Integrality(String),
    #[error("quadrature did not converge (residual {residual:e})")]
    Quadrature { residual: f64 },
    #[error("degenerate: {0}")]
    Degenerate(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("entropy mismatch: valuation {valuation}, intersection {intersection}")]
    EntropyMismatch { valuation: String, intersection: String },
    #[error("inconsistent: {0}")]
    Inconsistent(String),
}

impl Error {
    /// 2 for bad input, 3 for math-domain failures, 4 for broken internal identities.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::EmptyPolytope | Error::DimensionMismatch { .. } | Error::InvalidInput(_) => 2,
            Error::EntropyMismatch { .. } | Error::Inconsistent(_) => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
