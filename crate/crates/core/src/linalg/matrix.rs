use std::ops::{Add, Deref, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use super::eig::hermitian_eig;
use super::Tolerances;
use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Builds a matrix from row-major data, rejecting wrong lengths and
    /// non-finite entries.
    pub fn try_new(dim: usize, data: Vec<C64>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(Error::BadShape {
                dim,
                len: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dim,
                col: pos % dim,
            });
        }
        Ok(Self { dim, data })
    }

    /// Real matrix from rows.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let data = rows
            .iter()
            .flat_map(|r| r.iter().map(|&x| C64::new(x, 0.0)))
            .collect();
        Self::try_new(dim, data)
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<C64>]) -> Self {
        let dim = cols.len();
        Self::from_fn(dim, |i, j| cols[j][i])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.dim).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn diag_real(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self[(i, i)].re).collect()
    }

    /// `max |A - A*|` entrywise.
    pub fn hermitian_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..self.dim {
            for j in i..self.dim {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_exactly_hermitian(&self) -> bool {
        (0..self.dim).all(|i| (i..self.dim).all(|j| self[(i, j)] == self[(j, i)].conj()))
    }

    pub fn is_exactly_antihermitian(&self) -> bool {
        (0..self.dim).all(|i| (i..self.dim).all(|j| self[(i, j)] == -self[(j, i)].conj()))
    }

    pub fn matmul(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            let row = &mut out.data[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let brow = &rhs.data[k * n..(k + 1) * n];
                for (o, b) in row.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `U* A U`: expresses `self` in the basis given by the columns of `u`.
    pub fn to_basis(&self, u: &CMatrix) -> CMatrix {
        u.adjoint().matmul(&self.matmul(u))
    }

    /// `U A U*`: the inverse of [`CMatrix::to_basis`] for unitary `u`.
    pub fn from_basis(&self, u: &CMatrix) -> CMatrix {
        u.matmul(&self.matmul(&u.adjoint()))
    }

    pub fn checked_sub(&self, rhs: &CMatrix) -> Result<CMatrix> {
        check_dims(self.dim, rhs.dim)?;
        Ok(self - rhs)
    }

    pub fn checked_add(&self, rhs: &CMatrix) -> Result<CMatrix> {
        check_dims(self.dim, rhs.dim)?;
        Ok(self + rhs)
    }

    pub fn checked_mul(&self, rhs: &CMatrix) -> Result<CMatrix> {
        check_dims(self.dim, rhs.dim)?;
        Ok(self.matmul(rhs))
    }

    /// Real and imaginary parts as nested row vectors.
    pub fn to_parts(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let re = (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self[(i, j)].re).collect())
            .collect();
        let im = (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self[(i, j)].im).collect())
            .collect();
        (re, im)
    }
}

pub(crate) fn check_dims(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::DimensionMismatch { left, right });
    }
    Ok(())
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "add dimension mismatch");
        CMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "sub dimension mismatch");
        CMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

/// A self-adjoint matrix. The stored matrix is exactly Hermitian.
#[derive(Debug, Clone, PartialEq)]
pub struct Hermitian(CMatrix);

impl Hermitian {
    /// Accepts `m` when `max |m - m*| <= tol`, then symmetrizes it.
    pub fn new(m: CMatrix, tol: f64) -> Result<Self> {
        let deviation = m.hermitian_deviation();
        if deviation > tol {
            return Err(Error::NotHermitian { deviation, tol });
        }
        Ok(Self::symmetrized(m))
    }

    /// Uses the default tolerance `1e-10 * dim`.
    pub fn try_from_matrix(m: CMatrix) -> Result<Self> {
        let tol = Tolerances::default().herm(m.dim());
        Self::new(m, tol)
    }

    /// `(m + m*) / 2` without any check; for matrices Hermitian by construction.
    pub fn symmetrized(mut m: CMatrix) -> Self {
        let n = m.dim();
        for i in 0..n {
            m[(i, i)] = C64::new(m[(i, i)].re, 0.0);
            for j in i + 1..n {
                let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
                m[(i, j)] = avg;
                m[(j, i)] = avg.conj();
            }
        }
        Self(m)
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        Self(CMatrix::from_diag(diag))
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::try_from_matrix(CMatrix::from_real_rows(rows)?)
    }

    /// `U diag(values) U*`.
    pub fn from_spectrum(values: &[f64], basis: &CMatrix) -> Self {
        Self::symmetrized(CMatrix::from_diag(values).from_basis(basis))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.scale(s))
    }

    pub fn sub(&self, rhs: &Hermitian) -> Result<Hermitian> {
        Ok(Self(self.0.checked_sub(&rhs.0)?))
    }

    pub fn add(&self, rhs: &Hermitian) -> Result<Hermitian> {
        Ok(Self(self.0.checked_add(&rhs.0)?))
    }

    /// Operator norm, `max |eigenvalue|`.
    pub fn norm(&self) -> Result<f64> {
        let eig = hermitian_eig(self, Tolerances::default().eig)?;
        Ok(eig.values.iter().map(|v| v.abs()).fold(0.0, f64::max))
    }
}

impl Deref for Hermitian {
    type Target = CMatrix;
    fn deref(&self) -> &CMatrix {
        &self.0
    }
}

/// An orthogonal projection.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    matrix: Hermitian,
    rank: usize,
}

impl Projection {
    /// Validates `||P^2 - P||_op <= tol`; rank is `round(tr P)`.
    pub fn new(p: Hermitian, tol: f64) -> Result<Self> {
        let eig = hermitian_eig(&p, Tolerances::default().eig)?;
        let defect = eig
            .values
            .iter()
            .map(|&l| (l * l - l).abs())
            .fold(0.0, f64::max);
        if defect > tol {
            return Err(Error::NotProjection { defect, tol });
        }
        let rank = p.trace().re.round().max(0.0) as usize;
        Ok(Self { matrix: p, rank })
    }

    /// Projection onto the span of the selected columns of a unitary matrix.
    pub fn from_columns(u: &CMatrix, cols: &[usize]) -> Self {
        let n = u.dim();
        let mut m = CMatrix::zeros(n);
        for &c in cols {
            for i in 0..n {
                let ui = u[(i, c)];
                if ui == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    m[(i, j)] += ui * u[(j, c)].conj();
                }
            }
        }
        Self {
            matrix: Hermitian::symmetrized(m),
            rank: cols.len(),
        }
    }

    /// Coordinate projection onto the given basis indices.
    pub fn coordinate(dim: usize, indices: &[usize]) -> Self {
        let mut diag = vec![0.0; dim];
        for &i in indices {
            diag[i] = 1.0;
        }
        Self {
            matrix: Hermitian::from_diag(&diag),
            rank: indices.len(),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            matrix: Hermitian(CMatrix::zeros(dim)),
            rank: 0,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: Hermitian(CMatrix::identity(dim)),
            rank: dim,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn hermitian(&self) -> &Hermitian {
        &self.matrix
    }

    pub fn matrix(&self) -> &CMatrix {
        self.matrix.matrix()
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Sum of projections assumed mutually orthogonal.
    pub fn sum(dim: usize, parts: &[&Projection]) -> Self {
        let mut m = CMatrix::zeros(dim);
        let mut rank = 0;
        for p in parts {
            m = &m + p.matrix();
            rank += p.rank;
        }
        Self {
            matrix: Hermitian::symmetrized(m),
            rank,
        }
    }
}

impl Deref for Projection {
    type Target = CMatrix;
    fn deref(&self) -> &CMatrix {
        self.matrix.matrix()
    }
}
