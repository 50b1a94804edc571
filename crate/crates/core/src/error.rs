use thiserror::Error;

pub type Result<T, E = QuadError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported family: {0}")]
    UnsupportedFamily(String),

    #[error("degree {degree} needs {needed} recurrence coefficients, table has {available}")]
    DegreeTooHigh {
        degree: usize,
        needed: usize,
        available: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("weight {index} is not positive ({value})")]
    NonPositiveWeight { index: usize, value: f64 },

    #[error("size {size} exceeds cap {cap} (set QUADKIT_CAP to raise it)")]
    CapExceeded { size: u128, cap: usize },

    #[error("eigensolver did not converge for eigenvalue {index} within {iterations} iterations")]
    NoConvergence { index: usize, iterations: usize },

    #[error("recurrence lost positivity at beta[{index}] = {value:e}")]
    PositivityLoss { index: usize, value: f64 },

    #[error("degenerate density: total mass {0:e}")]
    DegenerateDensity(f64),

    #[error("matrix is rank deficient: pivot {index} has norm {norm:e}")]
    RankDeficient { index: usize, norm: f64 },

    #[error("Hessian factorization failed at Newton iteration {iteration}")]
    HessianFactorization { iteration: usize },

    #[error("Gramian of the starting selection is singular")]
    SingularGramian,

    #[error("Christoffel function vanishes at point {0}")]
    ZeroKernel(usize),

    #[error("basis does not contain the zero multi-index")]
    MissingZeroIndex,

    #[error("sparse grid weights cancelled completely")]
    CancelledWeights,

    #[error("row index {index} out of range for {rows} rows")]
    IndexOutOfRange { index: usize, rows: usize },
}

impl QuadError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        QuadError::InvalidArgument(msg.into())
    }
}
