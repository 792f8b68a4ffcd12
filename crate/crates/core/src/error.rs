use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("polynomial degree {0} outside the supported range 1..={max}", max = crate::MAX_DEGREE)]
    InvalidDegree(usize),

    #[error("quadrature order {0} outside the supported range 1..=64")]
    InvalidQuadratureOrder(usize),

    #[error("degenerate rectangle [{x0}, {x1}] x [{y0}, {y1}]")]
    DegenerateDomain { x0: f64, x1: f64, y0: f64, y1: f64 },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("non-positive Jacobian determinant {det:e} at ({xi}, {eta})")]
    NonPositiveJacobian { det: f64, xi: f64, eta: f64 },

    #[error("the two operands live on different meshes")]
    MeshMismatch,

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("cannot embed degree {from} coefficients into degree {to}")]
    DegreeOrder { from: usize, to: usize },

    #[error("reaction coefficient must be positive, got {0}")]
    NonPositiveReaction(f64),

    #[error("problem has no exact solution to project")]
    MissingExactSolution,

    #[error("conjugate gradient stopped after {iterations} iterations at relative residual {residual:e}")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("sparse Cholesky factorization failed: {0}")]
    Factorization(String),

    #[error("matrix market: {0}")]
    MatrixMarket(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
