//! Density matrices, discrete spectra and Born distributions.

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eig, BlockPartition, CMatrix, Eigen, Hermitian, Projection, Tolerances,
};

const DENSITY_EIG_FLOOR: f64 = -1e-12;
const DENSITY_TRACE_TOL: f64 = 1e-10;

/// Positive semidefinite Hermitian matrix of unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(Hermitian);

impl DensityMatrix {
    pub fn new(h: Hermitian) -> Result<Self> {
        let trace = h.trace().re;
        if (trace - 1.0).abs() > DENSITY_TRACE_TOL {
            return Err(Error::NotDensity(format!("trace is {trace}")));
        }
        let eig = hermitian_eig(&h, Tolerances::default().eig)?;
        let min = eig.values.last().copied().unwrap_or(0.0);
        if min < DENSITY_EIG_FLOOR {
            return Err(Error::NotDensity(format!("eigenvalue {min:e} is negative")));
        }
        Ok(Self(h))
    }

    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        Self::new(Hermitian::try_from_matrix(m)?)
    }

    /// `U diag(weights) U*`; `weights` must be non-negative and sum to one.
    pub fn from_spectrum(weights: &[f64], basis: &CMatrix) -> Result<Self> {
        Self::new(Hermitian::from_spectrum(weights, basis))
    }

    pub fn from_diag(weights: &[f64]) -> Result<Self> {
        Self::new(Hermitian::from_diag(weights))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(Hermitian::from_diag(&vec![1.0 / dim as f64; dim]))
    }

    pub fn hermitian(&self) -> &Hermitian {
        &self.0
    }

    pub fn matrix(&self) -> &CMatrix {
        self.0.matrix()
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }
}

/// Eigenvalues grouped into distinct values with their eigenprojections.
///
/// Indices refer to columns of `eigenbasis` (descending eigenvalue order).
/// Eigenvalues within the degeneracy tolerance of zero form the kernel group.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub raw_eigenvalues: Vec<f64>,
    pub eigenbasis: CMatrix,
    pub distinct_values: Vec<f64>,
    pub groups: Vec<Vec<usize>>,
    pub group_weights: Vec<f64>,
    pub kernel_group: Vec<usize>,
    pub tol_degeneracy: f64,
}

/// Groups the spectrum of `a` by greedy chaining of eigenvalues closer than
/// `tol_degeneracy` (absolute).
pub fn decompose(a: &Hermitian, tol_degeneracy: f64) -> Result<SpectralDecomposition> {
    let eig = hermitian_eig(a, Tolerances::default().eig)?;
    Ok(decompose_eigen(eig, tol_degeneracy))
}

/// [`decompose`] with the default relative tolerance `1e-9 * ||a||`.
pub fn decompose_default(a: &Hermitian, tol: &Tolerances) -> Result<SpectralDecomposition> {
    let eig = hermitian_eig(a, tol.eig)?;
    let norm = eig.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    Ok(decompose_eigen(eig, tol.degeneracy_for(norm)))
}

pub fn decompose_eigen(eig: Eigen, tol_degeneracy: f64) -> SpectralDecomposition {
    let values = eig.values;
    let mut chains: Vec<Vec<usize>> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        match chains.last_mut() {
            Some(chain) if values[*chain.last().unwrap()] - v <= tol_degeneracy => chain.push(i),
            _ => chains.push(vec![i]),
        }
    }

    let mut distinct_values = Vec::new();
    let mut groups = Vec::new();
    let mut group_weights = Vec::new();
    let mut kernel_group = Vec::new();
    for chain in chains {
        let weight: f64 = chain.iter().map(|&i| values[i]).sum();
        let mean = weight / chain.len() as f64;
        let touches_zero = chain.iter().any(|&i| values[i].abs() <= tol_degeneracy);
        if touches_zero && kernel_group.is_empty() {
            kernel_group = chain;
        } else {
            distinct_values.push(mean);
            groups.push(chain);
            group_weights.push(weight);
        }
    }

    SpectralDecomposition {
        raw_eigenvalues: values,
        eigenbasis: eig.vectors,
        distinct_values,
        groups,
        group_weights,
        kernel_group,
        tol_degeneracy,
    }
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.raw_eigenvalues.len()
    }

    pub fn kernel_weight(&self) -> f64 {
        self.kernel_group.iter().map(|&i| self.raw_eigenvalues[i]).sum()
    }

    /// Distinct values and groups including the kernel as value 0, in
    /// descending order of value.
    pub fn all_groups(&self) -> Vec<(f64, Vec<usize>)> {
        let mut out: Vec<(f64, Vec<usize>)> = self
            .distinct_values
            .iter()
            .copied()
            .zip(self.groups.iter().cloned())
            .collect();
        if !self.kernel_group.is_empty() {
            out.push((0.0, self.kernel_group.clone()));
        }
        out.sort_by(|a, b| b.0.total_cmp(&a.0));
        out
    }

    /// Partition of eigenbasis indices: one block per distinct value plus the
    /// kernel block (possibly empty).
    pub fn block_partition(&self) -> BlockPartition {
        let mut blocks = self.groups.clone();
        blocks.push(self.kernel_group.clone());
        BlockPartition::new(self.dim(), blocks).expect("groups partition the eigenbasis")
    }

    pub fn projection(&self, indices: &[usize]) -> Projection {
        Projection::from_columns(&self.eigenbasis, indices)
    }

    /// `sum_n value_n pi_n` using the grouped values.
    pub fn reconstruct(&self) -> Hermitian {
        let mut diag = vec![0.0; self.dim()];
        for (value, group) in self.distinct_values.iter().zip(&self.groups) {
            for &i in group {
                diag[i] = *value;
            }
        }
        Hermitian::from_spectrum(&diag, &self.eigenbasis)
    }
}

/// Total weight of distinct eigenvalues at or below `eps^(1/4)`.
pub fn tail_weight(omega: &SpectralDecomposition, eps: f64) -> f64 {
    let threshold = eps.powf(0.25);
    let tail: f64 = omega
        .distinct_values
        .iter()
        .zip(&omega.group_weights)
        .filter(|(v, _)| **v <= threshold)
        .map(|(_, w)| w)
        .sum();
    let total = tail + omega.kernel_weight();
    // clamps rounding-negative kernel weight and the -0.0 of an empty sum
    if total > 0.0 {
        total
    } else {
        0.0
    }
}

/// Whether a zero is appended below the smallest value before taking gaps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapConvention {
    /// Density matrices: `omega_{N+1} := 0`.
    Density,
    /// Observables: gaps between listed values only.
    Observable,
}

/// Smallest gap between consecutive descending values.
///
/// A single observable value has no gap and yields `+inf`.
pub fn min_gap(values: &[f64], convention: GapConvention) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Precondition("min_gap needs at least one value".into()));
    }
    let mut list = values.to_vec();
    if convention == GapConvention::Density {
        list.push(0.0);
    }
    let gap = list
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(f64::INFINITY, f64::min);
    if gap <= 0.0 {
        return Err(Error::Precondition(format!(
            "values are not strictly decreasing (gap {gap})"
        )));
    }
    Ok(gap)
}

/// A projective observable `sum_k values_k projections_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSpec {
    pub values: Vec<f64>,
    pub projections: Vec<Projection>,
}

impl ObservableSpec {
    /// Validates strictly descending values, mutual orthogonality and
    /// completeness within `tol`.
    pub fn new(values: Vec<f64>, projections: Vec<Projection>, tol: f64) -> Result<Self> {
        if values.len() != projections.len() || values.is_empty() {
            return Err(Error::Precondition(
                "observable needs one projection per value".into(),
            ));
        }
        if values.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::Precondition(
                "observable values must be strictly decreasing".into(),
            ));
        }
        check_partition_of_unity(&projections, tol).map_err(Error::Precondition)?;
        Ok(Self {
            values,
            projections,
        })
    }

    /// Distinct eigenvalues and eigenprojections of `x`, zero included.
    pub fn from_hermitian(x: &Hermitian, tol: &Tolerances) -> Result<Self> {
        let dec = decompose_default(x, tol)?;
        Ok(Self::from_decomposition(&dec))
    }

    pub fn from_decomposition(dec: &SpectralDecomposition) -> Self {
        let (values, projections) = dec
            .all_groups()
            .into_iter()
            .map(|(v, g)| (v, dec.projection(&g)))
            .unzip();
        Self {
            values,
            projections,
        }
    }

    pub fn dim(&self) -> usize {
        self.projections[0].dim()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn to_matrix(&self) -> Hermitian {
        let mut m = CMatrix::zeros(self.dim());
        for (v, p) in self.values.iter().zip(&self.projections) {
            m = &m + &p.matrix().scale(*v);
        }
        Hermitian::symmetrized(m)
    }
}

/// Checks `P_i P_j = 0` for `i != j` and `sum P_i = 1` in operator norm.
pub(crate) fn check_partition_of_unity(
    projections: &[Projection],
    tol: f64,
) -> std::result::Result<(), String> {
    let dim = projections[0].dim();
    let mut total = CMatrix::zeros(dim);
    for (i, p) in projections.iter().enumerate() {
        if p.dim() != dim {
            return Err(format!("projection {i} has dimension {}, expected {dim}", p.dim()));
        }
        for (j, q) in projections.iter().enumerate().skip(i + 1) {
            let overlap = crate::linalg::operator_norm(&p.matmul(q));
            if overlap > tol {
                return Err(format!("projections {i} and {j} overlap: ||P_i P_j|| = {overlap:e}"));
            }
        }
        total = &total + p.matrix();
    }
    let defect = crate::linalg::operator_norm(&(&total - &CMatrix::identity(dim)));
    if defect > tol {
        return Err(format!("projections do not sum to the identity: defect {defect:e}"));
    }
    Ok(())
}

/// `tr(Omega P_k)` for every projection of the observable.
pub fn born_distribution(omega: &DensityMatrix, obs: &ObservableSpec) -> Result<Vec<f64>> {
    obs.projections
        .iter()
        .map(|p| trace_of_product(omega.matrix(), p.matrix()))
        .collect()
}

/// `tr(A B)` without forming the product.
pub fn trace_of_product(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let n = a.dim();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    Ok(s)
}

/// Closed intervals covering a finite spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalCover {
    pub intervals: Vec<(f64, f64)>,
    pub midpoints: Vec<f64>,
    pub half_width: f64,
    /// Indices into the input spectrum list, one list per interval.
    pub members: Vec<Vec<usize>>,
}

/// Greedy left-to-right cover by closed intervals of length at most `2 eps`.
///
/// Points are gathered into clusters of span below `2 eps`; each cluster
/// gets the interval of half-width `eps` centred on it, clipped at the
/// midpoint of the gap to a neighbouring cluster so that intervals meet in
/// at most one point and that point is never in the spectrum. Every point
/// lies strictly inside its interval, hence strictly closer than `eps` to
/// the interval midpoint.
pub fn build_cover(spectrum: &[f64], eps: f64) -> Result<IntervalCover> {
    if spectrum.is_empty() {
        return Err(Error::Precondition("cannot cover an empty spectrum".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::Precondition(format!("cover half-width must be positive, got {eps}")));
    }
    let mut order: Vec<usize> = (0..spectrum.len()).collect();
    order.sort_by(|&a, &b| spectrum[a].total_cmp(&spectrum[b]));

    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        match clusters.last_mut() {
            Some(c) if spectrum[i] - spectrum[c[0]] < 2.0 * eps => c.push(i),
            _ => clusters.push(vec![i]),
        }
    }

    let lo_of = |c: &Vec<usize>| spectrum[c[0]];
    let hi_of = |c: &Vec<usize>| spectrum[*c.last().unwrap()];
    let mut intervals = Vec::with_capacity(clusters.len());
    for (k, c) in clusters.iter().enumerate() {
        let centre = 0.5 * (lo_of(c) + hi_of(c));
        let mut lo = centre - eps;
        let mut hi = centre + eps;
        if k > 0 {
            lo = lo.max(0.5 * (hi_of(&clusters[k - 1]) + lo_of(c)));
        }
        if k + 1 < clusters.len() {
            hi = hi.min(0.5 * (hi_of(c) + lo_of(&clusters[k + 1])));
        }
        intervals.push((lo, hi));
    }
    let midpoints = intervals.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect();
    Ok(IntervalCover {
        intervals,
        midpoints,
        half_width: eps,
        members: clusters,
    })
}
