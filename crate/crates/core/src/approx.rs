//! Dimension-independent commuting approximants.
//!
//! Given a density matrix `Omega` and an observable `X` with `||X|| <= 1` and
//! `||[Omega, X]|| <= eps`, the construction
//!
//! 1. scans the eigenvalues of `Omega` in ascending order and groups them into
//!    bins separated by gaps of at least `eps^beta`, sending everything below
//!    the first qualifying eigenvalue above `eps^delta` to a zero bin;
//! 2. flattens each bin to its smallest eigenvalue and the zero bin to 0,
//!    producing `Omega~ <= Omega` with the eigenvectors of `Omega`;
//! 3. cuts every matrix element of `X` (in the eigenbasis of `Omega`) that
//!    connects two different bins, producing `X'`;
//! 4. normalizes `Omega' = Omega~ / tr Omega~`.
//!
//! `Omega'` and `X'` are block diagonal in the same basis and commute.
//! With the default exponents `delta = 1/4`, `beta = 3/4` the distances obey
//! `||X - X'|| <= eps^(1/4)` and `tr|Omega - Omega'| <= 2 Delta_eps + C eps^(1/4)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    commutator, operator_norm, pinch, trace_norm, BlockPartition, Hermitian, Tolerances,
};
use crate::spectral::{decompose_default, tail_weight, DensityMatrix, SpectralDecomposition};

/// Constant in the trace-distance bound `2 Delta_eps + C eps^(1/4)`.
///
/// Frozen from the calibration family `harness::sweep::calibration_recipes`:
/// the largest observed `(dOmega - 2 Delta_eps) / eps^(1/4)` there is 0.090,
/// and `C = ceil(1.5 * 0.090)`. `cargo run --release --example calibrate`
/// recomputes it.
pub const DOMEGA_CONSTANT: f64 = 1.0;

/// How a bin's eigenvalues are replaced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representative {
    /// The smallest member; guarantees `Omega~ <= Omega`.
    #[default]
    Minimum,
    /// The bin average. Halves the flattening error but loses `Omega~ <= Omega`.
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinningParams {
    pub epsilon: f64,
    pub delta_exp: f64,
    pub beta_exp: f64,
    pub representative: Representative,
}

impl BinningParams {
    pub const DEFAULT_DELTA: f64 = 0.25;
    pub const DEFAULT_BETA: f64 = 0.75;

    pub fn new(epsilon: f64, delta_exp: f64, beta_exp: f64) -> Result<Self> {
        let p = Self {
            epsilon,
            delta_exp,
            beta_exp,
            representative: Representative::Minimum,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_epsilon(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, Self::DEFAULT_DELTA, Self::DEFAULT_BETA)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "epsilon must be a finite non-negative number, got {}",
                self.epsilon
            )));
        }
        let (d, b) = (self.delta_exp, self.beta_exp);
        if !(0.0 < d && d < b && b < 1.0 && b > 2.0 * d) {
            return Err(Error::InvalidParams(format!(
                "exponents must satisfy 0 < delta < beta < 1 and beta > 2 delta, got delta = {d}, beta = {b}"
            )));
        }
        Ok(())
    }

    /// `eps^delta`: eigenvalues below this may be sent to the zero bin.
    pub fn low_threshold(&self) -> f64 {
        self.epsilon.powf(self.delta_exp)
    }

    /// `eps^beta`: minimum gap separating bins.
    pub fn gap_threshold(&self) -> f64 {
        self.epsilon.powf(self.beta_exp)
    }

    /// `eps^(1 - beta)`, the operator-norm bound on `X - X'`.
    pub fn observable_bound(&self) -> f64 {
        self.epsilon.powf(1.0 - self.beta_exp)
    }
}

/// A group of eigenvalues of `Omega` replaced by a single value.
#[derive(Debug, Clone, PartialEq)]
pub struct Bin {
    /// Smallest and largest member eigenvalue (`[0, precursor]` for the zero bin).
    pub lo: f64,
    pub hi: f64,
    /// Eigenbasis column indices, ascending in eigenvalue.
    pub members: Vec<usize>,
    pub representative: f64,
    /// Largest eigenvalue below the bin, if any.
    pub precursor: Option<f64>,
}

impl Bin {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapBinning {
    pub bins: Vec<Bin>,
    pub zero_bin: Bin,
    /// Number of eigenvalues at or above `eps^delta`.
    pub count_above_threshold: usize,
    /// `eps^(-delta)`, the trace bound on that count.
    pub count_bound: f64,
    dim: usize,
}

impl GapBinning {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bin_count(&self) -> usize {
        self.bins.len()
    }

    pub fn bin_sizes(&self) -> Vec<usize> {
        self.bins.iter().map(Bin::len).collect()
    }

    pub fn representatives(&self) -> Vec<f64> {
        self.bins.iter().map(|b| b.representative).collect()
    }

    /// Bins plus the zero bin as blocks of eigenbasis indices.
    pub fn partition(&self) -> BlockPartition {
        let mut blocks: Vec<Vec<usize>> = self.bins.iter().map(|b| b.members.clone()).collect();
        blocks.push(self.zero_bin.members.clone());
        BlockPartition::new(self.dim, blocks).expect("bins partition the eigenbasis")
    }

    /// Flattened eigenvalue for every eigenbasis column.
    pub fn flat_values(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for bin in &self.bins {
            for &i in &bin.members {
                out[i] = bin.representative;
            }
        }
        out
    }
}

/// Groups the eigenvalues of `Omega` by gaps of at least `eps^beta`.
pub fn gap_binning(omega: &SpectralDecomposition, params: &BinningParams) -> GapBinning {
    let values = &omega.raw_eigenvalues;
    let n = values.len();
    let ascending: Vec<usize> = (0..n).rev().collect();
    let low = params.low_threshold();
    let gap = params.gap_threshold();

    let below = |pos: usize| if pos == 0 { 0.0 } else { values[ascending[pos - 1]] };
    let opens = |pos: usize| values[ascending[pos]] - below(pos) >= gap;

    let first = (0..n).find(|&pos| values[ascending[pos]] >= low && opens(pos));

    let make_bin = |members: Vec<usize>, start: usize| {
        let lo = values[members[0]];
        let hi = values[*members.last().unwrap()];
        let representative = match params.representative {
            Representative::Minimum => lo,
            Representative::Mean => members.iter().map(|&i| values[i]).sum::<f64>() / members.len() as f64,
        };
        Bin {
            lo,
            hi,
            members,
            representative,
            precursor: (start > 0).then(|| below(start)),
        }
    };

    let split = first.unwrap_or(n);
    let zero_members: Vec<usize> = ascending[..split].to_vec();
    let zero_bin = Bin {
        lo: 0.0,
        hi: zero_members.last().map_or(0.0, |&i| values[i]),
        members: zero_members,
        representative: 0.0,
        precursor: None,
    };

    let mut bins = Vec::new();
    if let Some(first) = first {
        let mut start = first;
        for pos in first + 1..=n {
            if pos == n || opens(pos) {
                bins.push(make_bin(ascending[start..pos].to_vec(), start));
                start = pos;
            }
        }
    }

    GapBinning {
        bins,
        zero_bin,
        count_above_threshold: values.iter().filter(|&&v| v >= low).count(),
        count_bound: if params.epsilon > 0.0 { low.recip() } else { f64::INFINITY },
        dim: n,
    }
}

/// `Omega~`: same eigenvectors, eigenvalues replaced bin-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct Flattened {
    pub matrix: Hermitian,
    /// Eigenvalue of `Omega~` on each eigenbasis column of `Omega`.
    pub values: Vec<f64>,
    /// `tr |Omega - Omega~|`.
    pub trace_loss: f64,
    /// Mass of `Omega` removed by the zero bin.
    pub zero_bin_mass: f64,
    /// Mass removed inside the non-zero bins.
    pub flattening_loss: f64,
}

pub fn flatten_state(omega: &SpectralDecomposition, binning: &GapBinning) -> Result<Flattened> {
    if binning.dim() != omega.dim() {
        return Err(Error::DimensionMismatch {
            left: omega.dim(),
            right: binning.dim(),
        });
    }
    let raw = &omega.raw_eigenvalues;
    let values = binning.flat_values();
    let zero_bin_mass: f64 = binning.zero_bin.members.iter().map(|&i| raw[i].abs()).sum();
    let flattening_loss: f64 = binning
        .bins
        .iter()
        .flat_map(|b| b.members.iter())
        .map(|&i| (raw[i] - values[i]).abs())
        .sum();
    Ok(Flattened {
        matrix: Hermitian::from_spectrum(&values, &omega.eigenbasis),
        trace_loss: zero_bin_mass + flattening_loss,
        values,
        zero_bin_mass,
        flattening_loss,
    })
}

/// `X'`: the matrix elements of `X` between different bins removed.
#[derive(Debug, Clone, PartialEq)]
pub struct Compressed {
    pub matrix: Hermitian,
    /// `sup_i (sum_{j in another bin} |<u_j, X u_i>|^2)^(1/2)`.
    pub row_leakage: f64,
}

pub fn block_compress(
    x: &Hermitian,
    omega: &SpectralDecomposition,
    binning: &GapBinning,
) -> Result<Compressed> {
    if x.dim() != omega.dim() || binning.dim() != omega.dim() {
        return Err(Error::DimensionMismatch {
            left: x.dim(),
            right: omega.dim().min(binning.dim()),
        });
    }
    let u = &omega.eigenbasis;
    let in_basis = x.to_basis(u);
    let blocks = binning.partition();
    let n = x.dim();
    let row_leakage = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| !blocks.same_block(i, j))
                .map(|j| in_basis[(j, i)].norm_sqr())
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
        .sqrt();
    let compressed = pinch(&in_basis, &blocks)?.from_basis(u);
    Ok(Compressed {
        matrix: Hermitian::symmetrized(compressed),
        row_leakage,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentParams {
    pub delta_exp: f64,
    pub beta_exp: f64,
}

/// Certificate in the on-disk JSON layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub eps: f64,
    pub delta_eps: f64,
    #[serde(rename = "dX")]
    pub d_x: f64,
    #[serde(rename = "dOmega")]
    pub d_omega: f64,
    pub residual: f64,
    #[serde(rename = "bound_dX")]
    pub bound_d_x: f64,
    #[serde(rename = "bound_dOmega")]
    pub bound_d_omega: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub scale_factor: f64,
    pub params: ExponentParams,
}

/// Residual commutator tolerance, `1e-10 * M`.
pub fn residual_tolerance(dim: usize) -> f64 {
    1e-10 * dim as f64
}

impl Certificate {
    pub fn pass_dx(&self) -> bool {
        self.d_x <= self.bound_d_x
    }

    pub fn pass_domega(&self) -> bool {
        self.d_omega <= self.bound_d_omega
    }

    pub fn pass_residual(&self, dim: usize) -> bool {
        self.residual <= residual_tolerance(dim)
    }

    /// Human-readable list of violated inequalities.
    pub fn violations(&self, dim: usize) -> Vec<String> {
        let mut out = Vec::new();
        if !self.pass_dx() {
            out.push(format!("||X - X'|| = {:e} > {:e}", self.d_x, self.bound_d_x));
        }
        if !self.pass_domega() {
            out.push(format!(
                "tr|Omega - Omega'| = {:e} > 2 Delta_eps + C eps^(1/4) = {:e}",
                self.d_omega, self.bound_d_omega
            ));
        }
        if !self.pass_residual(dim) {
            out.push(format!(
                "||[Omega', X']|| = {:e} > {:e}",
                self.residual,
                residual_tolerance(dim)
            ));
        }
        out
    }
}

/// Quantities not in the certificate file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub eps_measured: f64,
    pub row_leakage: f64,
    pub row_leakage_bound: f64,
    pub zero_bin_mass: f64,
    pub flattening_loss: f64,
    pub bin_count: usize,
    pub count_above_threshold: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommutingApproximant {
    pub omega_prime: DensityMatrix,
    pub x_prime: Hermitian,
    pub binning: Option<GapBinning>,
    pub cert: Certificate,
    pub diagnostics: Diagnostics,
}

/// Relative slack allowed when comparing the measured commutator with `eps`.
const EPS_ROUNDING_SLACK: f64 = 1e-9;

/// Runs the full construction.
///
/// `X` with `||X|| > 1` is divided by its norm first; `X'` is scaled back and
/// the `X` bound is multiplied by the same factor.
pub fn commuting_approximants(
    omega: &DensityMatrix,
    x: &Hermitian,
    params: &BinningParams,
    tol: &Tolerances,
) -> Result<CommutingApproximant> {
    params.validate()?;
    let dim = x.dim();
    if omega.dim() != dim {
        return Err(Error::DimensionMismatch {
            left: omega.dim(),
            right: dim,
        });
    }
    let norm_x = operator_norm(x);
    let scale = norm_x.max(1.0);
    let eps_measured = operator_norm(&commutator(omega.matrix(), x)?);
    let exps = ExponentParams {
        delta_exp: params.delta_exp,
        beta_exp: params.beta_exp,
    };

    if params.epsilon == 0.0 {
        if eps_measured > residual_tolerance(dim) * scale {
            return Err(Error::EpsilonExceeded {
                measured: eps_measured,
                epsilon: 0.0,
            });
        }
        return Ok(CommutingApproximant {
            omega_prime: omega.clone(),
            x_prime: x.clone(),
            binning: None,
            cert: Certificate {
                eps: 0.0,
                delta_eps: 0.0,
                d_x: 0.0,
                d_omega: 0.0,
                residual: eps_measured,
                bound_d_x: 0.0,
                bound_d_omega: 0.0,
                c: DOMEGA_CONSTANT,
                scale_factor: scale,
                params: exps,
            },
            diagnostics: Diagnostics {
                eps_measured,
                row_leakage: 0.0,
                row_leakage_bound: 0.0,
                zero_bin_mass: 0.0,
                flattening_loss: 0.0,
                bin_count: 0,
                count_above_threshold: 0,
            },
        });
    }

    if eps_measured / scale > params.epsilon * (1.0 + EPS_ROUNDING_SLACK) {
        return Err(Error::EpsilonExceeded {
            measured: eps_measured / scale,
            epsilon: params.epsilon,
        });
    }

    let dec = decompose_default(omega.hermitian(), tol)?;
    let delta_eps = tail_weight(&dec, params.epsilon);
    let binning = gap_binning(&dec, params);
    let flat = flatten_state(&dec, &binning)?;
    let trace = flat.values.iter().sum::<f64>();
    if !(trace > 0.0) {
        return Err(Error::TailTooLarge { delta_eps });
    }

    let normalized: Vec<f64> = flat.values.iter().map(|v| v / trace).collect();
    let omega_prime = DensityMatrix::new(Hermitian::from_spectrum(&normalized, &dec.eigenbasis))?;

    let x_unit = x.scale(1.0 / scale);
    let compressed = block_compress(&x_unit, &dec, &binning)?;
    let x_prime = compressed.matrix.scale(scale);

    let quarter = params.epsilon.powf(0.25);
    let cert = Certificate {
        eps: params.epsilon,
        delta_eps,
        d_x: operator_norm(&(x.matrix() - x_prime.matrix())),
        d_omega: trace_norm(&(omega.matrix() - omega_prime.matrix())),
        residual: operator_norm(&commutator(omega_prime.matrix(), &x_prime)?),
        bound_d_x: scale * params.observable_bound(),
        bound_d_omega: 2.0 * delta_eps + DOMEGA_CONSTANT * quarter,
        c: DOMEGA_CONSTANT,
        scale_factor: scale,
        params: exps,
    };
    let diagnostics = Diagnostics {
        eps_measured,
        row_leakage: compressed.row_leakage,
        row_leakage_bound: params.observable_bound(),
        zero_bin_mass: flat.zero_bin_mass,
        flattening_loss: flat.flattening_loss,
        bin_count: binning.bin_count(),
        count_above_threshold: binning.count_above_threshold,
    };
    Ok(CommutingApproximant {
        omega_prime,
        x_prime,
        binning: Some(binning),
        cert,
        diagnostics,
    })
}

/// Recomputes every certificate field from the matrices and compares with
/// `claimed` at relative tolerance `rel_tol`. Returns mismatching field names.
pub fn recheck_certificate(
    omega: &DensityMatrix,
    x: &Hermitian,
    claimed: &Certificate,
    tol: &Tolerances,
    rel_tol: f64,
) -> Result<Vec<String>> {
    let mut params = BinningParams::new(
        claimed.eps,
        claimed.params.delta_exp,
        claimed.params.beta_exp,
    )?;
    params.representative = Representative::Minimum;
    let fresh = commuting_approximants(omega, x, &params, tol)?.cert;
    let close = |a: f64, b: f64, abs_floor: f64| (a - b).abs() <= rel_tol * a.abs().max(b.abs()) + abs_floor;
    let floor = residual_tolerance(x.dim());
    let mut bad = Vec::new();
    let fields = [
        ("eps", fresh.eps, claimed.eps, 0.0),
        ("delta_eps", fresh.delta_eps, claimed.delta_eps, 0.0),
        ("dX", fresh.d_x, claimed.d_x, 1e-14),
        ("dOmega", fresh.d_omega, claimed.d_omega, 1e-14),
        ("residual", fresh.residual, claimed.residual, floor),
        ("bound_dX", fresh.bound_d_x, claimed.bound_d_x, 0.0),
        ("bound_dOmega", fresh.bound_d_omega, claimed.bound_d_omega, 0.0),
        ("C", fresh.c, claimed.c, 0.0),
        ("scale_factor", fresh.scale_factor, claimed.scale_factor, 0.0),
    ];
    for (name, a, b, abs_floor) in fields {
        if !close(a, b, abs_floor) {
            bad.push(format!("{name}: recomputed {a:e}, certificate says {b:e}"));
        }
    }
    Ok(bad)
}
