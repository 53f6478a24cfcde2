use super::eig::{hermitian_eig, DEFAULT_EIG_TOL};
use super::matrix::{check_dims, CMatrix, Hermitian, Projection, C64};
use crate::error::{Error, Result};

/// `AB - BA`.
pub fn commutator(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    check_dims(a.dim(), b.dim())?;
    Ok(&a.matmul(b) - &b.matmul(a))
}

/// A partition of the basis indices `0..dim` into disjoint blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
}

impl BlockPartition {
    pub fn new(dim: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut block_of = vec![usize::MAX; dim];
        for (b, block) in blocks.iter().enumerate() {
            for &i in block {
                if i >= dim {
                    return Err(Error::InvalidPartition(format!(
                        "index {i} out of range for dimension {dim}"
                    )));
                }
                if block_of[i] != usize::MAX {
                    return Err(Error::InvalidPartition(format!(
                        "index {i} appears in blocks {} and {b}",
                        block_of[i]
                    )));
                }
                block_of[i] = b;
            }
        }
        if let Some(i) = block_of.iter().position(|&b| b == usize::MAX) {
            return Err(Error::InvalidPartition(format!("index {i} is not covered")));
        }
        Ok(Self { blocks, block_of })
    }

    pub fn single(dim: usize) -> Self {
        Self {
            blocks: vec![(0..dim).collect()],
            block_of: vec![0; dim],
        }
    }

    pub fn singletons(dim: usize) -> Self {
        Self {
            blocks: (0..dim).map(|i| vec![i]).collect(),
            block_of: (0..dim).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.block_of.len()
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_of(&self, i: usize) -> usize {
        self.block_of[i]
    }

    pub fn same_block(&self, i: usize, j: usize) -> bool {
        self.block_of[i] == self.block_of[j]
    }

    /// Number of blocks with at least one index.
    pub fn nonempty_blocks(&self) -> usize {
        self.blocks.iter().filter(|b| !b.is_empty()).count()
    }
}

/// Zeroes every entry connecting two different blocks.
pub fn pinch(a: &CMatrix, blocks: &BlockPartition) -> Result<CMatrix> {
    check_dims(a.dim(), blocks.dim())?;
    let mut out = a.clone();
    let n = a.dim();
    for i in 0..n {
        for j in 0..n {
            if !blocks.same_block(i, j) {
                out[(i, j)] = C64::new(0.0, 0.0);
            }
        }
    }
    Ok(out)
}

/// `sum_k P_k A P_k` for projections given as matrices.
pub fn pinch_by_projections(a: &CMatrix, projections: &[Projection]) -> Result<CMatrix> {
    let mut out = CMatrix::zeros(a.dim());
    for p in projections {
        check_dims(a.dim(), p.dim())?;
        out = &out + &p.matmul(&a.matmul(p));
    }
    Ok(out)
}

/// Result of rounding an almost-idempotent Hermitian operator.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundedProjection {
    pub projection: Projection,
    /// `||P^2 - P||_op`.
    pub defect: f64,
    /// `||P_hat - P||_op`.
    pub distance: f64,
    /// `distance <= 2 * defect`, the guarantee of spectral rounding.
    pub within_factor_two: bool,
    /// `distance < delta`, the stricter form that can fail near eigenvalue 1/2.
    pub within_delta: bool,
}

/// Spectral projection of `p` onto its eigenvalues above 1/2.
///
/// Requires `delta < 1/2` and `||P^2 - P|| < delta`. Eigenvalues exactly at
/// 1/2 round down.
pub fn round_to_projection(p: &Hermitian, delta: f64) -> Result<RoundedProjection> {
    if !(delta < 0.5) {
        return Err(Error::Precondition(format!(
            "rounding threshold delta = {delta} must be below 1/2"
        )));
    }
    let eig = hermitian_eig(p, DEFAULT_EIG_TOL)?;
    let defect = eig
        .values
        .iter()
        .map(|&l| (l * l - l).abs())
        .fold(0.0, f64::max);
    if !(defect < delta) {
        return Err(Error::Precondition(format!(
            "||P^2 - P|| = {defect} is not below delta = {delta}"
        )));
    }
    let keep: Vec<usize> = (0..eig.dim()).filter(|&i| eig.values[i] > 0.5).collect();
    let distance = eig
        .values
        .iter()
        .map(|&l| if l > 0.5 { (1.0 - l).abs() } else { l.abs() })
        .fold(0.0, f64::max);
    let projection = Projection::from_columns(&eig.vectors, &keep);
    Ok(RoundedProjection {
        projection,
        defect,
        distance,
        within_factor_two: distance <= 2.0 * defect,
        within_delta: distance < delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::operator_norm;

    #[test]
    fn commutator_of_diagonals_vanishes() {
        let c = commutator(&CMatrix::from_diag(&[1.0, 2.0]), &CMatrix::from_diag(&[3.0, 4.0])).unwrap();
        assert_eq!(c, CMatrix::zeros(2));
    }

    #[test]
    fn commutator_running_example() {
        let omega = CMatrix::from_diag(&[0.75, 0.25]);
        let x = CMatrix::from_real_rows(&[vec![0.0, 0.2], vec![0.2, 0.0]]).unwrap();
        let c = commutator(&omega, &x).unwrap();
        let expected = CMatrix::from_real_rows(&[vec![0.0, 0.1], vec![-0.1, 0.0]]).unwrap();
        assert!(operator_norm(&(&c - &expected)) < 1e-16);
        assert!(c.is_exactly_antihermitian());
    }

    #[test]
    fn commutator_dimension_mismatch() {
        assert_eq!(
            commutator(&CMatrix::zeros(2), &CMatrix::zeros(3)).unwrap_err(),
            Error::DimensionMismatch { left: 2, right: 3 }
        );
    }

    #[test]
    fn pinch_examples() {
        let a = CMatrix::from_real_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert_eq!(pinch(&a, &BlockPartition::single(2)).unwrap(), a);
        assert_eq!(
            pinch(&a, &BlockPartition::singletons(2)).unwrap(),
            CMatrix::from_diag(&[1.0, 1.0])
        );
    }

    #[test]
    fn partition_validation() {
        assert!(BlockPartition::new(3, vec![vec![0, 1], vec![1, 2]]).is_err());
        assert!(BlockPartition::new(3, vec![vec![0, 1]]).is_err());
        assert!(BlockPartition::new(3, vec![vec![0, 3]]).is_err());
        let b = BlockPartition::new(3, vec![vec![2, 0], vec![], vec![1]]).unwrap();
        assert_eq!(b.nonempty_blocks(), 2);
        assert!(b.same_block(0, 2));
    }

    #[test]
    fn rounding_fixed_point_and_midpoint() {
        let r = round_to_projection(&Hermitian::from_diag(&[1.0, 0.0]), 0.1).unwrap();
        assert_eq!(r.distance, 0.0);
        assert_eq!(r.projection.rank(), 1);

        let r = round_to_projection(&Hermitian::from_diag(&[0.9, 0.1]), 0.1).unwrap();
        assert!((r.defect - 0.09).abs() < 1e-15);
        assert!((r.distance - 0.1).abs() < 1e-15);
        assert!(r.within_factor_two);
        assert!(!r.within_delta || r.distance < 0.1);
        assert_eq!(r.projection.diag_real(), vec![1.0, 0.0]);
    }

    #[test]
    fn rounding_rejects_half_identity() {
        let half = Hermitian::from_diag(&[0.5, 0.5]);
        assert!(round_to_projection(&half, 0.25).is_err());
        assert!(round_to_projection(&half, 0.5).is_err());
        // above the defect the midpoint rounds down
        let r = round_to_projection(&half, 0.3).unwrap();
        assert_eq!(r.projection.rank(), 0);
        assert_eq!(r.distance, 0.5);
        assert!(r.within_factor_two);
        assert!(!r.within_delta);
    }
}
