//! Finite-dimensional pinching constructions and measurement-postulate checks.
//!
//! [`pinch_observable`] keeps the state and block-diagonalizes the observable
//! along the state's eigenprojections; [`pinch_state`] does the converse.
//! Both carry a certificate comparing the achieved distance against the
//! dimension-dependent gap bound. [`quantize_observable`] replaces an
//! observable by a finite-valued one built from an interval cover.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    commutator, operator_norm, pinch, pinch_by_projections, trace_norm, Hermitian, Tolerances,
};
use crate::spectral::{
    born_distribution, build_cover, decompose_default, min_gap, DensityMatrix, GapConvention,
    IntervalCover, ObservableSpec,
};

/// Bound certificate for a single pinching construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PinchCertificate {
    /// Measured `||[Omega, X]||_op`.
    pub epsilon: f64,
    /// The gap of the operator whose eigenprojections were used.
    pub gap: f64,
    pub dim: usize,
    /// Number of non-empty blocks in the pinching.
    pub blocks: usize,
    /// `M^2 / gamma * eps` for observables, `M^3 / gamma * eps` for states.
    pub claimed_bound: f64,
    /// Block-counting form: `B (B - 1) / gamma * eps`, times `M` for states.
    pub block_bound: f64,
    /// `||X - X'||_op` or `tr |Omega - Omega'|`.
    pub achieved: f64,
    /// Operator norm of the commutator of the output pair.
    pub residual: f64,
}

impl PinchCertificate {
    pub fn holds(&self) -> bool {
        self.achieved <= self.claimed_bound && self.achieved <= self.block_bound
    }
}

fn check_gap(gap: f64, tol: f64) -> Result<()> {
    if gap <= tol {
        return Err(Error::DegenerateGap { gap, tol });
    }
    Ok(())
}

/// `X' = sum_n pi_n X pi_n` over the distinct eigenprojections of `Omega`,
/// kernel included.
pub fn pinch_observable(
    x: &Hermitian,
    omega: &DensityMatrix,
    tol: &Tolerances,
) -> Result<(Hermitian, PinchCertificate)> {
    let dim = x.dim();
    if omega.dim() != dim {
        return Err(Error::DimensionMismatch {
            left: omega.dim(),
            right: dim,
        });
    }
    let dec = decompose_default(omega.hermitian(), tol)?;
    let gap = min_gap(&dec.distinct_values, GapConvention::Density)?;
    check_gap(gap, dec.tol_degeneracy)?;

    let blocks = dec.block_partition();
    let u = &dec.eigenbasis;
    let x_prime = Hermitian::symmetrized(pinch(&x.to_basis(u), &blocks)?.from_basis(u));

    let epsilon = operator_norm(&commutator(omega.matrix(), x)?);
    let b = blocks.nonempty_blocks() as f64;
    let m = dim as f64;
    let cert = PinchCertificate {
        epsilon,
        gap,
        dim,
        blocks: blocks.nonempty_blocks(),
        claimed_bound: m * m / gap * epsilon,
        block_bound: b * (b - 1.0) / gap * epsilon,
        achieved: operator_norm(&(x.matrix() - x_prime.matrix())),
        residual: operator_norm(&commutator(omega.matrix(), &x_prime)?),
    };
    Ok((x_prime, cert))
}

/// `Omega' = sum_k Pi_k Omega Pi_k` over the distinct eigenprojections of `X`.
pub fn pinch_state(
    omega: &DensityMatrix,
    x: &Hermitian,
    tol: &Tolerances,
) -> Result<(DensityMatrix, PinchCertificate)> {
    let dim = x.dim();
    if omega.dim() != dim {
        return Err(Error::DimensionMismatch {
            left: omega.dim(),
            right: dim,
        });
    }
    let dec = decompose_default(x, tol)?;
    let values: Vec<f64> = dec.all_groups().iter().map(|(v, _)| *v).collect();
    let gap = min_gap(&values, GapConvention::Observable)?;
    check_gap(gap, dec.tol_degeneracy)?;

    let blocks = dec.block_partition();
    let u = &dec.eigenbasis;
    let pinched = Hermitian::symmetrized(pinch(&omega.matrix().to_basis(u), &blocks)?.from_basis(u));
    let omega_prime = DensityMatrix::new(pinched)?;

    let epsilon = operator_norm(&commutator(omega.matrix(), x)?);
    let k = blocks.nonempty_blocks() as f64;
    let m = dim as f64;
    let cert = PinchCertificate {
        epsilon,
        gap,
        dim,
        blocks: blocks.nonempty_blocks(),
        claimed_bound: m * m * m / gap * epsilon,
        block_bound: m * k * (k - 1.0) / gap * epsilon,
        achieved: trace_norm(&(omega.matrix() - omega_prime.matrix())),
        residual: operator_norm(&commutator(omega_prime.matrix(), x)?),
    };
    Ok((omega_prime, cert))
}

/// Finite-valued replacement of an observable built from an interval cover.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedObservable {
    pub matrix: Hermitian,
    pub spec: ObservableSpec,
    pub cover: IntervalCover,
    /// `||X - X'||_op`.
    pub distance: f64,
}

/// `X' = sum_k xi_k Pi(Delta_k)` with `xi_k` the midpoint of `Delta_k` and
/// interval lengths at most `2 eps`, so that `||X - X'|| < eps`.
pub fn quantize_observable(x: &Hermitian, eps: f64, tol: &Tolerances) -> Result<QuantizedObservable> {
    let dec = decompose_default(x, tol)?;
    let groups = dec.all_groups();
    let values: Vec<f64> = groups.iter().map(|(v, _)| *v).collect();
    let cover = build_cover(&values, eps)?;

    // cover intervals ascend; observable values descend
    let mut pairs: Vec<(f64, Vec<usize>)> = cover
        .members
        .iter()
        .zip(&cover.midpoints)
        .map(|(members, &xi)| {
            let cols: Vec<usize> = members.iter().flat_map(|&g| groups[g].1.clone()).collect();
            (xi, cols)
        })
        .collect();
    pairs.reverse();

    let mut diag = vec![0.0; x.dim()];
    for (xi, cols) in &pairs {
        for &c in cols {
            diag[c] = *xi;
        }
    }
    let matrix = Hermitian::from_spectrum(&diag, &dec.eigenbasis);
    let spec = ObservableSpec {
        values: pairs.iter().map(|(xi, _)| *xi).collect(),
        projections: pairs.iter().map(|(_, cols)| dec.projection(cols)).collect(),
    };
    let distance = operator_norm(&(x.matrix() - matrix.matrix()));
    Ok(QuantizedObservable {
        matrix,
        spec,
        cover,
        distance,
    })
}

/// Outcome of checking an output state against the observable: near-commutation and Born weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PostulateReport {
    /// `||[Omega_out, X]||_op`.
    pub commutator_norm: f64,
    /// `max_k |tr(Omega_in Pi_k) - tr(Omega_out Pi_k)|` over the distinct
    /// eigenprojections of `X`.
    pub born_discrepancy: f64,
    /// Same, over the projections of a `2 eps` interval cover of spec(X).
    pub cover_born_discrepancy: f64,
    /// `tr |Omega_out - sum_k Pi_k Omega_out Pi_k|` over the cover projections.
    pub block_residual: f64,
    pub verdict_amended: bool,
    pub verdict_born: bool,
}

/// Born agreement threshold used for `verdict_born`.
pub const BORN_TOL: f64 = 1e-10;

pub fn check_postulate(
    omega_in: &DensityMatrix,
    omega_out: &DensityMatrix,
    x: &Hermitian,
    eps: f64,
    tol: &Tolerances,
) -> Result<PostulateReport> {
    let commutator_norm = operator_norm(&commutator(omega_out.matrix(), x)?);
    let obs = ObservableSpec::from_hermitian(x, tol)?;
    let born_discrepancy = max_born_gap(omega_in, omega_out, &obs)?;

    let quantized = quantize_observable(x, eps, tol)?;
    let cover_born_discrepancy = max_born_gap(omega_in, omega_out, &quantized.spec)?;
    let blocked = pinch_by_projections(omega_out.matrix(), &quantized.spec.projections)?;
    let block_residual = trace_norm(&(omega_out.matrix() - &blocked));

    Ok(PostulateReport {
        commutator_norm,
        born_discrepancy,
        cover_born_discrepancy,
        block_residual,
        verdict_amended: commutator_norm < eps,
        verdict_born: born_discrepancy <= BORN_TOL,
    })
}

fn max_born_gap(a: &DensityMatrix, b: &DensityMatrix, obs: &ObservableSpec) -> Result<f64> {
    let pa = born_distribution(a, obs)?;
    let pb = born_distribution(b, obs)?;
    Ok(pa
        .iter()
        .zip(&pb)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}
