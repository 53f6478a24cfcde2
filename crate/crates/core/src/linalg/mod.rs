//! Dense complex Hermitian linear algebra.
//!
//! Everything above this module works with [`CMatrix`] and its checked
//! wrappers [`Hermitian`] and [`Projection`]. Hermitian matrices are
//! symmetrized on construction, so `A[(i, j)] == A[(j, i)].conj()` holds
//! bit-for-bit for every value of that type.

mod eig;
mod matrix;
mod norms;
mod ops;

pub use eig::{hermitian_eig, Eigen, DEFAULT_EIG_TOL};
pub use matrix::{CMatrix, Hermitian, Projection, C64};
pub use norms::{operator_norm, singular_values, trace_norm};
pub use ops::{
    commutator, pinch, pinch_by_projections, round_to_projection, BlockPartition,
    RoundedProjection,
};

/// Numerical tolerances shared by all constructions.
///
/// `base` is scaled by the dimension for Hermiticity and projection checks.
/// `degeneracy` is relative to the operator norm of the matrix being grouped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub base: f64,
    pub degeneracy: f64,
    pub eig: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            base: 1e-10,
            degeneracy: 1e-9,
            eig: DEFAULT_EIG_TOL,
        }
    }
}

impl Tolerances {
    pub fn with_base(base: f64) -> Self {
        Self {
            base,
            ..Self::default()
        }
    }

    pub fn herm(&self, dim: usize) -> f64 {
        self.base * dim as f64
    }

    pub fn proj(&self, dim: usize) -> f64 {
        self.base * dim as f64
    }

    /// Absolute grouping tolerance for a matrix of the given operator norm.
    pub fn degeneracy_for(&self, norm: f64) -> f64 {
        self.degeneracy * norm.max(f64::MIN_POSITIVE)
    }
}
