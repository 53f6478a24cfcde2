use super::eig::{hermitian_eig, DEFAULT_EIG_TOL};
use super::matrix::{CMatrix, Hermitian, C64};

/// Singular values in descending order.
///
/// Hermitian and anti-Hermitian inputs are diagonalized directly. Anything
/// else goes through the Hermitian dilation `[[0, A], [A*, 0]]`, whose
/// spectrum is `{+s_i, -s_i}`; this keeps small singular values accurate,
/// unlike the eigenvalues of `A* A`.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    let n = a.dim();
    let mut sv: Vec<f64> = if a.is_exactly_hermitian() {
        eigenvalues(Hermitian::symmetrized(a.clone()))
            .into_iter()
            .map(f64::abs)
            .collect()
    } else if a.is_exactly_antihermitian() {
        let ia = a.scale_complex(C64::new(0.0, 1.0));
        eigenvalues(Hermitian::symmetrized(ia))
            .into_iter()
            .map(f64::abs)
            .collect()
    } else {
        let dil = CMatrix::from_fn(2 * n, |i, j| match (i < n, j < n) {
            (true, false) => a[(i, j - n)],
            (false, true) => a[(j, i - n)].conj(),
            _ => C64::new(0.0, 0.0),
        });
        // descending: the first n are +s_i
        eigenvalues(Hermitian::symmetrized(dil))
            .into_iter()
            .take(n)
            .map(|s| s.max(0.0))
            .collect()
    };
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

fn eigenvalues(h: Hermitian) -> Vec<f64> {
    // The Jacobi iteration converges for every finite Hermitian input well
    // before the sweep cap; a failure here means non-finite data slipped in.
    hermitian_eig(&h, DEFAULT_EIG_TOL)
        .expect("eigensolver failed on a finite Hermitian matrix")
        .values
}

/// Largest singular value.
pub fn operator_norm(a: &CMatrix) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// Sum of singular values.
pub fn trace_norm(a: &CMatrix) -> f64 {
    singular_values(a).iter().sum()
}
