use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("matrix has {len} entries, expected {dim}x{dim}")]
    BadShape { dim: usize, len: usize },

    #[error("matrix entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not Hermitian: max |A - A*| = {deviation:e} exceeds {tol:e}")]
    NotHermitian { deviation: f64, tol: f64 },

    #[error("not an orthogonal projection: ||P^2 - P|| = {defect:e} exceeds {tol:e}")]
    NotProjection { defect: f64, tol: f64 },

    #[error("not a density matrix: {0}")]
    NotDensity(String),

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("invalid block partition: {0}")]
    InvalidPartition(String),

    #[error("invalid event partition: {0}")]
    InvalidEvent(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("spectral gap {gap:e} is below the degeneracy tolerance {tol:e}; use the gap-binning construction instead")]
    DegenerateGap { gap: f64, tol: f64 },

    #[error("commutator norm {measured:e} exceeds epsilon {epsilon:e}")]
    EpsilonExceeded { measured: f64, epsilon: f64 },

    #[error("all spectral weight falls in the zero bin (tail weight {delta_eps}); epsilon is too large for this state")]
    TailTooLarge { delta_eps: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("projection rounding precondition failed for index set {k}, cell {n}: ||P^2 - P|| = {defect:e}")]
    RoundingFailed { k: usize, n: usize, defect: f64 },

    #[error("infeasible instance recipe: {0}")]
    InfeasibleRecipe(String),

    #[error("{0}")]
    Format(String),
}
