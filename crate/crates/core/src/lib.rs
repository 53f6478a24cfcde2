//! Commuting approximations of a density matrix and an observable whose
//! commutator is small, with certified dimension-free error bounds.

pub mod approx;
pub mod error;
pub mod events;
pub mod harness;
pub mod linalg;
pub mod postulate;
pub mod spectral;

pub use approx::{commuting_approximants, BinningParams, Certificate, CommutingApproximant};
pub use error::{Error, Result};
pub use linalg::{CMatrix, Hermitian, Projection, Tolerances, C64};
pub use spectral::DensityMatrix;
