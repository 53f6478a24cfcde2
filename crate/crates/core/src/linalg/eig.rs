//! Cyclic Jacobi eigensolver for complex Hermitian matrices.
//!
//! Each rotation first removes the phase of the pivot `a_pq` with a diagonal
//! unitary and then applies a real Givens rotation, so the accumulated
//! eigenvector matrix stays unitary to rounding.

use super::matrix::{CMatrix, Hermitian, C64};
use crate::error::{Error, Result};

/// Relative off-diagonal Frobenius mass at which a sweep sequence stops.
pub const DEFAULT_EIG_TOL: f64 = 1e-14;

/// Eigenvalues in descending order with matching eigenvector columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Eigen {
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

fn off_diagonal_norm(a: &CMatrix) -> f64 {
    let n = a.dim();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Diagonalizes `a` by cyclic Jacobi sweeps.
///
/// Stops once the off-diagonal Frobenius norm is at most `tol * ||a||_F`.
/// The sweep cap is `30 * n^2`.
pub fn hermitian_eig(a: &Hermitian, tol: f64) -> Result<Eigen> {
    let n = a.dim();
    let mut w = a.matrix().clone();
    let mut v = CMatrix::identity(n);
    let target = tol * w.frobenius_norm();
    let max_sweeps = 30 * n * n;

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&w);
        if off <= target {
            break;
        }
        if sweeps >= max_sweeps {
            return Err(Error::NoConvergence {
                sweeps,
                off_norm: off,
            });
        }
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                rotated |= rotate(&mut w, &mut v, p, q);
            }
        }
        sweeps += 1;
        if !rotated {
            break;
        }
    }

    let diag = w.diag_real();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]));
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = CMatrix::from_fn(n, |i, j| v[(i, order[j])]);
    Ok(Eigen { values, vectors })
}

/// One Jacobi rotation annihilating `w[p][q]`. Returns false when the pivot
/// is already zero.
fn rotate(w: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) -> bool {
    let apq = w[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return false;
    }
    if r < f64::MIN_POSITIVE {
        // subnormal pivots lose the precision needed for a unit phase
        w[(p, q)] = C64::new(0.0, 0.0);
        w[(q, p)] = C64::new(0.0, 0.0);
        return true;
    }
    let n = w.dim();
    let app = w[(p, p)].re;
    let aqq = w[(q, q)].re;
    let phase = C64::from_polar(1.0, apq.arg());

    let theta = (aqq - app) / (2.0 * r);
    let t = if theta.is_finite() {
        theta.signum() / (theta.abs() + theta.hypot(1.0))
    } else {
        0.0
    };
    if t == 0.0 {
        // pivot negligible against the diagonal gap
        w[(p, q)] = C64::new(0.0, 0.0);
        w[(q, p)] = C64::new(0.0, 0.0);
        return true;
    }
    let c = 1.0 / t.hypot(1.0);
    let s = t * c;
    let e_minus = phase.conj();

    // columns: A <- A G, with G = [[c, s], [-s e^{-i phi}, c e^{-i phi}]]
    for k in 0..n {
        let akp = w[(k, p)];
        let akq = w[(k, q)];
        w[(k, p)] = akp * c - akq * e_minus * s;
        w[(k, q)] = akp * s + akq * e_minus * c;
    }
    // rows: A <- G* A
    for k in 0..n {
        let apk = w[(p, k)];
        let aqk = w[(q, k)];
        w[(p, k)] = apk * c - aqk * phase * s;
        w[(q, k)] = apk * s + aqk * phase * c;
    }
    w[(p, p)] = C64::new(app - t * r, 0.0);
    w[(q, q)] = C64::new(aqq + t * r, 0.0);
    w[(p, q)] = C64::new(0.0, 0.0);
    w[(q, p)] = C64::new(0.0, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - vkq * e_minus * s;
        v[(k, q)] = vkp * s + vkq * e_minus * c;
    }
    true
}
