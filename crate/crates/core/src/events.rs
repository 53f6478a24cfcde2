//! Events, their truncation, and the chain of observables compatible with them.
//!
//! An event is a partition of unity `{pi_n}`. Given a state, the event is
//! truncated to the cells carrying all but `eps` of the weight plus a tail
//! cell. Each head cell is attributed to one eigenvalue `xi_k` of the
//! observable, and the observable is replaced step by step:
//!
//! * `X'   = sum_n pi_n X pi_n`
//! * `X''  = sum_k xi_k sum_{n in I_k} pi_n Pi_k pi_n + T`
//! * `X''' = sum_k xi_k sum_{n in I_k} pi_{k,n} + T`
//! * `X_fin = X''' - T`
//!
//! where `T = pi_tail X pi_tail` and `pi_{k,n}` is the rounding of
//! `pi_n Pi_k pi_n` to a projection.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    commutator, hermitian_eig, operator_norm, round_to_projection, trace_norm, CMatrix, Hermitian,
    Projection, Tolerances,
};
use crate::spectral::{check_partition_of_unity, trace_of_product, DensityMatrix, ObservableSpec};

/// Largest admissible rounding threshold; `||P^2 - P||` must stay below it.
pub const ROUNDING_DELTA: f64 = 0.5 - 1e-12;

/// Thresholds for the `O(.)` conditions; measured values are always reported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventConstants {
    /// `max ||[pi_n, Pi_k]|| < c1 * N0^(-n0_exponent) * eps`.
    pub c1: f64,
    /// `leakage_k < c2 * eps`.
    pub c2: f64,
    /// `||X''' - X|| < c3 * eps`.
    pub c3: f64,
    pub n0_exponent: f64,
}

impl Default for EventConstants {
    fn default() -> Self {
        Self {
            c1: 1.0,
            c2: 1.0,
            c3: 1.0,
            n0_exponent: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventPartition {
    cells: Vec<Projection>,
}

impl EventPartition {
    /// Validates mutual orthogonality and completeness within `tol`.
    pub fn new(cells: Vec<Projection>, tol: f64) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::InvalidEvent("an event needs at least one cell".into()));
        }
        check_partition_of_unity(&cells, tol).map_err(Error::InvalidEvent)?;
        Ok(Self { cells })
    }

    /// Cells spanned by groups of columns of a unitary; every column used once.
    pub fn from_basis(u: &CMatrix, groups: &[Vec<usize>]) -> Result<Self> {
        crate::linalg::BlockPartition::new(u.dim(), groups.to_vec())
            .map_err(|e| Error::InvalidEvent(e.to_string()))?;
        let cells = groups.iter().map(|g| Projection::from_columns(u, g)).collect();
        Self::new(cells, Tolerances::default().proj(u.dim()).max(1e-9))
    }

    pub fn coordinate(dim: usize, groups: &[Vec<usize>]) -> Result<Self> {
        Self::from_basis(&CMatrix::identity(dim), groups)
    }

    pub fn cells(&self) -> &[Projection] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.cells[0].dim()
    }

    /// Merges cells according to `groups` of cell indices.
    pub fn coarsen(&self, groups: &[Vec<usize>]) -> Result<Self> {
        crate::linalg::BlockPartition::new(self.len(), groups.to_vec())
            .map_err(|e| Error::InvalidEvent(e.to_string()))?;
        let cells = groups
            .iter()
            .filter(|g| !g.is_empty())
            .map(|g| {
                let parts: Vec<&Projection> = g.iter().map(|&i| &self.cells[i]).collect();
                Projection::sum(self.dim(), &parts)
            })
            .collect();
        Ok(Self { cells })
    }
}

/// `sum_n pi_n A pi_n`.
fn pinch_cells(a: &CMatrix, cells: &[Projection]) -> CMatrix {
    let mut out = CMatrix::zeros(a.dim());
    for p in cells {
        out = &out + &p.matmul(&a.matmul(p));
    }
    out
}

fn check_dim(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::DimensionMismatch { left, right });
    }
    Ok(())
}

/// `tr |Omega - sum_n pi_n Omega pi_n|`; zero iff the event is an actuality.
pub fn check_actuality(omega: &DensityMatrix, event: &EventPartition) -> Result<f64> {
    check_dim(omega.dim(), event.dim())?;
    let pinched = pinch_cells(omega.matrix(), event.cells());
    Ok(trace_norm(&(omega.matrix() - &pinched)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedEvent {
    /// Cells `pi_1 .. pi_{N0-1}` by descending weight.
    pub head: Vec<Projection>,
    pub head_weights: Vec<f64>,
    /// `pi_{N0}`: the sum of the remaining cells, possibly zero.
    pub tail: Projection,
    pub tail_probability: f64,
    /// One-based index of the tail cell, `head.len() + 1`.
    pub n0: usize,
    /// Original cell index of every sorted position; the first `N0 - 1` are the head.
    pub order: Vec<usize>,
}

impl TruncatedEvent {
    pub fn dim(&self) -> usize {
        self.tail.dim()
    }

    /// Head cells followed by the tail.
    pub fn cells(&self) -> Vec<Projection> {
        let mut cells = self.head.clone();
        cells.push(self.tail.clone());
        cells
    }
}

/// Keeps the heaviest cells until their weight exceeds `1 - eps`.
pub fn truncate_tail(
    omega: &DensityMatrix,
    event: &EventPartition,
    eps: f64,
) -> Result<TruncatedEvent> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParams(format!(
            "truncation epsilon must lie in (0, 1), got {eps}"
        )));
    }
    check_dim(omega.dim(), event.dim())?;
    let weights = event
        .cells()
        .iter()
        .map(|p| trace_of_product(omega.matrix(), p.matrix()))
        .collect::<Result<Vec<f64>>>()?;
    let mut order: Vec<usize> = (0..event.len()).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]));

    let mut head_len = order.len();
    let mut partial = 0.0;
    for (pos, &i) in order.iter().enumerate() {
        if partial > 1.0 - eps {
            head_len = pos;
            break;
        }
        partial += weights[i];
    }

    let head: Vec<Projection> = order[..head_len]
        .iter()
        .map(|&i| event.cells()[i].clone())
        .collect();
    let tail_parts: Vec<&Projection> = order[head_len..].iter().map(|&i| &event.cells()[i]).collect();
    let tail = Projection::sum(event.dim(), &tail_parts);
    let tail_probability = trace_of_product(omega.matrix(), tail.matrix())?;
    Ok(TruncatedEvent {
        head_weights: order[..head_len].iter().map(|&i| weights[i]).collect(),
        head,
        tail,
        tail_probability,
        n0: head_len + 1,
        order,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexAssignment {
    /// `I_k` as zero-based head positions, one list per observable value.
    pub sets: Vec<Vec<usize>>,
    /// Observable index assigned to each head cell.
    pub assignment: Vec<usize>,
    /// `max_{n,k} ||[pi_n, Pi_k]||` over head cells.
    pub max_comm: f64,
    pub comm_threshold: f64,
    pub comm_ok: bool,
    /// `sum_{n not in I_k} ||pi_n Pi_k pi_n||` per `k`.
    pub leakage: Vec<f64>,
    pub leakage_threshold: f64,
    pub leakage_ok: bool,
}

/// Attributes each head cell to the observable value whose projection
/// covers the largest fraction of it; ties go to the smaller index.
pub fn assign_index_sets(
    event: &TruncatedEvent,
    obs: &ObservableSpec,
    eps: f64,
    consts: &EventConstants,
) -> Result<IndexAssignment> {
    check_dim(event.dim(), obs.dim())?;
    let k_count = obs.len();
    let mut sets = vec![Vec::new(); k_count];
    let mut assignment = Vec::with_capacity(event.head.len());
    let mut max_comm: f64 = 0.0;
    // ||pi_n Pi_k pi_n|| for the leakage sums
    let mut overlap = vec![vec![0.0; k_count]; event.head.len()];

    for (n, pi) in event.head.iter().enumerate() {
        let rank = pi.trace().re;
        let mut best = (0, f64::NEG_INFINITY);
        for (k, big_pi) in obs.projections.iter().enumerate() {
            let sandwich = pi.matmul(&big_pi.matmul(pi));
            let ratio = if rank > 0.0 { sandwich.trace().re / rank } else { 0.0 };
            if ratio > best.1 {
                best = (k, ratio);
            }
            overlap[n][k] = operator_norm(&sandwich);
            max_comm = max_comm.max(operator_norm(&commutator(pi, big_pi)?));
        }
        sets[best.0].push(n);
        assignment.push(best.0);
    }

    let leakage: Vec<f64> = (0..k_count)
        .map(|k| {
            (0..event.head.len())
                .filter(|&n| assignment[n] != k)
                .map(|n| overlap[n][k])
                .sum()
        })
        .collect();
    let comm_threshold = consts.c1 * (event.n0 as f64).powf(-consts.n0_exponent) * eps;
    let leakage_threshold = consts.c2 * eps;
    Ok(IndexAssignment {
        comm_ok: max_comm < comm_threshold,
        leakage_ok: leakage.iter().all(|&l| l < leakage_threshold),
        sets,
        assignment,
        max_comm,
        comm_threshold,
        leakage,
        leakage_threshold,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainDiagnostics {
    pub max_comm: f64,
    pub leakage: Vec<f64>,
    /// `||X' - X||`
    pub d1: f64,
    /// `||X'' - X'||`
    pub d2: f64,
    /// `||X''' - X||`
    pub d3: f64,
    /// `max_n ||[X_fin, pi_n]||` over all cells including the tail.
    pub fin_comms: f64,
    /// `max ||pi_n pi_{k,n} - pi_{k,n}||`
    pub containment: f64,
    /// `max ||P^2 - P||` over the rounded operators.
    pub max_defect: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementChain {
    pub index_sets: Vec<Vec<usize>>,
    pub x_prime: Hermitian,
    pub x_dprime: Hermitian,
    pub x_tprime: Hermitian,
    pub x_fin: Hermitian,
    /// `pi_{k,n}` keyed by `(k, n)` with `n` a head position.
    pub rounded: Vec<((usize, usize), Projection)>,
    pub diagnostics: ChainDiagnostics,
}

pub fn build_measurement_chain(
    x: &Hermitian,
    event: &TruncatedEvent,
    obs: &ObservableSpec,
    assignment: &IndexAssignment,
) -> Result<MeasurementChain> {
    let dim = x.dim();
    check_dim(dim, event.dim())?;
    check_dim(dim, obs.dim())?;
    if assignment.sets.len() != obs.len() {
        return Err(Error::Precondition(format!(
            "{} index sets for {} observable values",
            assignment.sets.len(),
            obs.len()
        )));
    }
    let tail_part = event.tail.matmul(&x.matmul(&event.tail));

    let x_prime = Hermitian::symmetrized(pinch_cells(x, &event.cells()));

    let mut dprime = CMatrix::zeros(dim);
    let mut fin = CMatrix::zeros(dim);
    let mut rounded = Vec::new();
    let mut containment: f64 = 0.0;
    let mut max_defect: f64 = 0.0;
    for (k, set) in assignment.sets.iter().enumerate() {
        let xi = obs.values[k];
        for &n in set {
            let pi = event.head.get(n).ok_or_else(|| {
                Error::Precondition(format!("index set {k} names head cell {n}, which does not exist"))
            })?;
            let sandwich = Hermitian::symmetrized(pi.matmul(&obs.projections[k].matmul(pi)));
            let r = round_to_projection(&sandwich, ROUNDING_DELTA).map_err(|_| {
                let eig = hermitian_eig(&sandwich, Tolerances::default().eig);
                let defect = eig
                    .map(|e| e.values.iter().map(|&l| (l * l - l).abs()).fold(0.0, f64::max))
                    .unwrap_or(f64::NAN);
                Error::RoundingFailed { k, n, defect }
            })?;
            max_defect = max_defect.max(r.defect);
            containment = containment.max(operator_norm(&(&pi.matmul(&r.projection) - r.projection.matrix())));
            dprime = &dprime + &sandwich.scale(xi);
            fin = &fin + &r.projection.scale(xi);
            rounded.push(((k, n), r.projection));
        }
    }
    let x_dprime = Hermitian::symmetrized(&dprime + &tail_part);
    let x_fin = Hermitian::symmetrized(fin);
    let x_tprime = Hermitian::symmetrized(x_fin.matrix() + &tail_part);

    let fin_comms = event
        .cells()
        .iter()
        .map(|p| commutator(&x_fin, p).map(|c| operator_norm(&c)))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    let diagnostics = ChainDiagnostics {
        max_comm: assignment.max_comm,
        leakage: assignment.leakage.clone(),
        d1: operator_norm(&(x_prime.matrix() - x.matrix())),
        d2: operator_norm(&(x_dprime.matrix() - x_prime.matrix())),
        d3: operator_norm(&(x_tprime.matrix() - x.matrix())),
        fin_comms,
        containment,
        max_defect,
    };
    Ok(MeasurementChain {
        index_sets: assignment.sets.clone(),
        x_prime,
        x_dprime,
        x_tprime,
        x_fin,
        rounded,
        diagnostics,
    })
}

/// One checked item: measured value against its threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Check {
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(value: f64, threshold: f64) -> Self {
        Self {
            value,
            threshold,
            pass: value <= threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventReport {
    /// Tail probability against `eps`.
    pub tail: Check,
    /// `||[X''', pi_tail]||`.
    pub reduction: Check,
    /// `||X''' - X||` against `c3 * eps`.
    pub approximation: Check,
    /// Distance of the spectrum of `X_fin` from `{xi_k} U {0}`.
    pub spectrum: Check,
    /// `max_k ||E_k(X_fin) - sum_{n in I_k} pi_{k,n}||` over nonzero `xi_k`.
    pub eigenprojections: Check,
    /// `max_n ||[X_fin, pi_n]||`.
    pub fin_comms: Check,
}

impl EventReport {
    pub fn all_pass(&self) -> bool {
        self.failures().is_empty()
    }

    /// Names and excess of every failing item.
    pub fn failures(&self) -> Vec<String> {
        [
            ("tail probability", &self.tail),
            ("reduction by the tail", &self.reduction),
            ("||X''' - X||", &self.approximation),
            ("spectrum of X_fin", &self.spectrum),
            ("eigenprojections of X_fin", &self.eigenprojections),
            ("[X_fin, pi_n]", &self.fin_comms),
        ]
        .into_iter()
        .filter(|(_, c)| !c.pass)
        .map(|(name, c)| format!("{name}: {:e} exceeds {:e} by {:e}", c.value, c.threshold, c.value - c.threshold))
        .collect()
    }
}

/// Spectrum tolerance for `X_fin`.
pub const SPECTRUM_TOL: f64 = 1e-9;

pub fn verify_event_chain(
    chain: &MeasurementChain,
    event: &TruncatedEvent,
    obs: &ObservableSpec,
    eps: f64,
    consts: &EventConstants,
) -> Result<EventReport> {
    let dim = chain.x_fin.dim();
    let tol = 1e-10 * dim as f64;
    let reduction = operator_norm(&commutator(&chain.x_tprime, &event.tail)?);

    let eig = hermitian_eig(&chain.x_fin, Tolerances::default().eig)?;
    let allowed: Vec<f64> = obs.values.iter().copied().chain(std::iter::once(0.0)).collect();
    let spectrum_dist = eig
        .values
        .iter()
        .map(|&l| allowed.iter().map(|&a| (l - a).abs()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);

    let mut proj_err: f64 = 0.0;
    for (k, &xi) in obs.values.iter().enumerate() {
        if xi.abs() <= SPECTRUM_TOL {
            continue;
        }
        let cols: Vec<usize> = (0..dim).filter(|&i| (eig.values[i] - xi).abs() <= SPECTRUM_TOL).collect();
        let eigenprojection = Projection::from_columns(&eig.vectors, &cols);
        let mut expected = CMatrix::zeros(dim);
        for ((kk, _), p) in &chain.rounded {
            if *kk == k {
                expected = &expected + p.matrix();
            }
        }
        proj_err = proj_err.max(operator_norm(&(eigenprojection.matrix() - &expected)));
    }

    Ok(EventReport {
        tail: Check::at_most(event.tail_probability, eps),
        reduction: Check::at_most(reduction, tol),
        approximation: Check::at_most(chain.diagnostics.d3, consts.c3 * eps),
        spectrum: Check::at_most(spectrum_dist, SPECTRUM_TOL),
        eigenprojections: Check::at_most(proj_err, SPECTRUM_TOL),
        fin_comms: Check::at_most(chain.diagnostics.fin_comms, tol),
    })
}

/// Everything produced by running the event pipeline once.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRun {
    pub truncated: TruncatedEvent,
    pub actuality: f64,
    pub assignment: IndexAssignment,
    pub chain: MeasurementChain,
    pub report: EventReport,
}

pub fn run_event_pipeline(
    omega: &DensityMatrix,
    x: &Hermitian,
    event: &EventPartition,
    obs: &ObservableSpec,
    eps: f64,
    consts: &EventConstants,
) -> Result<EventRun> {
    let actuality = check_actuality(omega, event)?;
    let truncated = truncate_tail(omega, event, eps)?;
    let assignment = assign_index_sets(&truncated, obs, eps, consts)?;
    let chain = build_measurement_chain(x, &truncated, obs, &assignment)?;
    let report = verify_event_chain(&chain, &truncated, obs, eps, consts)?;
    Ok(EventRun {
        truncated,
        actuality,
        assignment,
        chain,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;

    fn rotation13(theta: f64) -> CMatrix {
        let (s, c) = theta.sin_cos();
        CMatrix::from_real_rows(&[
            vec![c, 0.0, -s],
            vec![0.0, 1.0, 0.0],
            vec![s, 0.0, c],
        ])
        .unwrap()
    }

    fn sign_observable() -> (Hermitian, ObservableSpec) {
        let x = Hermitian::from_diag(&[1.0, 1.0, -1.0]);
        let obs = ObservableSpec::new(
            vec![1.0, -1.0],
            vec![Projection::coordinate(3, &[0, 1]), Projection::coordinate(3, &[2])],
            1e-12,
        )
        .unwrap();
        (x, obs)
    }

    #[test]
    fn actuality_examples() {
        let omega = DensityMatrix::from_matrix(
            CMatrix::from_real_rows(&[vec![0.5, 0.1], vec![0.1, 0.5]]).unwrap(),
        )
        .unwrap();
        let coords = EventPartition::coordinate(2, &[vec![0], vec![1]]).unwrap();
        assert!((check_actuality(&omega, &coords).unwrap() - 0.2).abs() < 1e-14);
        let whole = EventPartition::coordinate(2, &[vec![0, 1]]).unwrap();
        assert!(check_actuality(&omega, &whole).unwrap() < 1e-15);
    }

    #[test]
    fn event_validation() {
        let overlapping = vec![Projection::coordinate(2, &[0]), Projection::coordinate(2, &[0, 1])];
        assert!(EventPartition::new(overlapping, 1e-12).is_err());
        let incomplete = vec![Projection::coordinate(3, &[0]), Projection::coordinate(3, &[1])];
        assert!(EventPartition::new(incomplete, 1e-12).is_err());
        assert!(EventPartition::coordinate(3, &[vec![0, 1], vec![1, 2]]).is_err());
    }

    #[test]
    fn truncation_examples() {
        let omega = DensityMatrix::from_diag(&[0.04, 0.3, 0.6, 0.06]).unwrap();
        let e = EventPartition::coordinate(4, &[vec![0], vec![1], vec![2], vec![3]]).unwrap();
        let t = truncate_tail(&omega, &e, 0.05).unwrap();
        assert_eq!(t.n0, 4);
        assert_eq!(t.order, vec![2, 1, 3, 0]);
        assert!((t.tail_probability - 0.04).abs() < 1e-15);
        assert_eq!(t.tail.diag_real(), vec![1.0, 0.0, 0.0, 0.0]);

        // single cell: no tail
        let one = EventPartition::coordinate(4, &[vec![0, 1, 2, 3]]).unwrap();
        let t = truncate_tail(&omega, &one, 0.5).unwrap();
        assert_eq!(t.n0, 2);
        assert_eq!(t.tail.rank(), 0);
        assert_eq!(t.tail_probability, 0.0);

        // uniform weights, eps = 1/(2N): the first N - 1 cells hold only 1 - 1/N
        let n = 4;
        let omega = DensityMatrix::maximally_mixed(n);
        let cells: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        let e = EventPartition::coordinate(n, &cells).unwrap();
        let t = truncate_tail(&omega, &e, 1.0 / (2.0 * n as f64)).unwrap();
        assert_eq!(t.n0, n + 1);
        assert_eq!(t.tail_probability, 0.0);

        assert!(truncate_tail(&omega, &e, 0.0).is_err());
        assert!(truncate_tail(&omega, &e, 1.0).is_err());
    }

    #[test]
    fn assignment_commuting_case() {
        let (_, obs) = sign_observable();
        let omega = DensityMatrix::from_diag(&[0.5, 0.3, 0.2]).unwrap();
        let e = EventPartition::coordinate(3, &[vec![0], vec![1], vec![2]]).unwrap();
        let t = truncate_tail(&omega, &e, 0.1).unwrap();
        let a = assign_index_sets(&t, &obs, 0.1, &EventConstants::default()).unwrap();
        assert_eq!(a.sets, vec![vec![0, 1], vec![2]]);
        assert_eq!(a.max_comm, 0.0);
        assert!(a.leakage.iter().all(|&l| l == 0.0));
        assert!(a.comm_ok && a.leakage_ok);
    }

    #[test]
    fn assignment_split_cell() {
        // cell spans e0 and e2 with weights 0.7 / 0.3 on the two observable values
        let (a, b) = (0.7f64.sqrt(), 0.3f64.sqrt());
        let u = CMatrix::from_real_rows(&[
            vec![a, 0.0, -b, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![b, 0.0, a, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
        ])
        .unwrap();
        let e = EventPartition::from_basis(&u, &[vec![0], vec![1], vec![2], vec![3]]).unwrap();
        let obs = ObservableSpec::new(
            vec![1.0, -1.0],
            vec![Projection::coordinate(4, &[0, 1]), Projection::coordinate(4, &[2, 3])],
            1e-12,
        )
        .unwrap();
        let omega = DensityMatrix::maximally_mixed(4);
        let t = truncate_tail(&omega, &e, 0.01).unwrap();
        assert_eq!(t.n0, 5);
        let asg = assign_index_sets(&t, &obs, 0.01, &EventConstants::default()).unwrap();
        // sorted order is stable for equal weights
        assert_eq!(asg.assignment, vec![0, 0, 1, 1]);
        // each side leaks the 0.3 share of the cell assigned to the other side
        assert!((asg.leakage[1] - 0.3).abs() < 1e-12);
        assert!((asg.leakage[0] - 0.3).abs() < 1e-12);
        assert!(!asg.leakage_ok);
    }

    #[test]
    fn chain_is_identity_when_event_refines_observable() {
        let (x, obs) = sign_observable();
        let omega = DensityMatrix::from_diag(&[0.5, 0.3, 0.2]).unwrap();
        let e = EventPartition::coordinate(3, &[vec![0], vec![1], vec![2]]).unwrap();
        let run = run_event_pipeline(&omega, &x, &e, &obs, 0.1, &EventConstants::default()).unwrap();
        for m in [&run.chain.x_prime, &run.chain.x_dprime, &run.chain.x_tprime, &run.chain.x_fin] {
            assert!(operator_norm(&(m.matrix() - x.matrix())) < 1e-15);
        }
        let d = &run.chain.diagnostics;
        assert_eq!((d.d1, d.d2, d.d3, d.fin_comms), (0.0, 0.0, 0.0, 0.0));
        assert!(run.report.all_pass(), "{:?}", run.report.failures());
        assert_eq!(run.actuality, 0.0);
    }

    #[test]
    fn rotated_event_three_by_three() {
        let (x, obs) = sign_observable();
        for theta in [1e-1, 1e-2, 1e-3] {
            let r = rotation13(theta);
            let e = EventPartition::from_basis(&r, &[vec![0], vec![1], vec![2]]).unwrap();
            let omega = DensityMatrix::from_spectrum(&[0.5, 0.3, 0.2], &r).unwrap();
            let run = run_event_pipeline(&omega, &x, &e, &obs, 0.1, &EventConstants::default()).unwrap();
            assert_eq!(run.truncated.n0, 4);
            let d = &run.chain.diagnostics;
            assert!((d.d3 - 2.0 * theta.sin()).abs() < 1e-12, "theta {theta}: d3 {}", d.d3);
            assert!(d.fin_comms <= 1e-10);
            assert!(d.containment <= 1e-12);
            let rep = &run.report;
            assert!(rep.tail.pass && rep.reduction.pass && rep.spectrum.pass);
            assert!(rep.eigenprojections.pass && rep.fin_comms.pass);
            // the approximation item has threshold c3 * eps = 0.1
            assert_eq!(rep.approximation.pass, 2.0 * theta.sin() <= 0.1);
        }
    }

    #[test]
    fn tail_is_split_off_exactly() {
        let (x, obs) = sign_observable();
        let x = Hermitian::symmetrized(&x.into_matrix() + &CMatrix::from_fn(3, |i, j| {
            if i + j == 2 && i != j { C64::new(0.05, 0.0) } else { C64::new(0.0, 0.0) }
        }));
        let omega = DensityMatrix::from_diag(&[0.6, 0.38, 0.02]).unwrap();
        let e = EventPartition::coordinate(3, &[vec![0], vec![1], vec![2]]).unwrap();
        let run = run_event_pipeline(&omega, &x, &e, &obs, 0.05, &EventConstants::default()).unwrap();
        assert_eq!(run.truncated.n0, 3);
        let t = &run.truncated.tail;
        let tail_part = t.matmul(&x.matmul(t));
        let diff = run.chain.x_tprime.matrix() - run.chain.x_fin.matrix();
        assert!(operator_norm(&(&diff - &tail_part)) < 1e-15);
        assert!(run.report.reduction.pass);
    }

    #[test]
    fn unrelated_event_is_reported() {
        // Hadamard-like event against a diagonal observable
        let s = 0.5f64.sqrt();
        let h = CMatrix::from_real_rows(&[vec![s, s], vec![s, -s]]).unwrap();
        let e = EventPartition::from_basis(&h, &[vec![0], vec![1]]).unwrap();
        let x = Hermitian::from_diag(&[1.0, -1.0]);
        let obs = ObservableSpec::from_hermitian(&x, &Tolerances::default()).unwrap();
        let omega = DensityMatrix::from_spectrum(&[0.9, 0.1], &h).unwrap();
        let t = truncate_tail(&omega, &e, 0.2).unwrap();
        let a = assign_index_sets(&t, &obs, 0.2, &EventConstants::default()).unwrap();
        assert!(!a.comm_ok);
        assert!(a.max_comm > 0.4);
        // pi_n Pi_k pi_n = pi_n / 2 sits at the rounding midpoint
        let chain = build_measurement_chain(&x, &t, &obs, &a).unwrap();
        let rep = verify_event_chain(&chain, &t, &obs, 0.2, &EventConstants::default()).unwrap();
        assert!(!rep.approximation.pass);
        assert!(rep.approximation.value >= 0.5);
        assert!(rep.failures()[0].starts_with("||X''' - X||"));
    }

    #[test]
    fn coarsening_reduces_actuality_residual() {
        let omega = DensityMatrix::from_matrix(
            CMatrix::from_real_rows(&[
                vec![0.4, 0.1, 0.05],
                vec![0.1, 0.3, 0.02],
                vec![0.05, 0.02, 0.3],
            ])
            .unwrap(),
        )
        .unwrap();
        let e = EventPartition::coordinate(3, &[vec![0], vec![1], vec![2]]).unwrap();
        let coarse = e.coarsen(&[vec![0, 1], vec![2]]).unwrap();
        assert!(check_actuality(&omega, &coarse).unwrap() <= check_actuality(&omega, &e).unwrap());
    }
}
