use crate::error::{Error, Result};
use crate::kernels::{gemm_acc, MatMut, MatRef, Op};

use super::{BlockRhs, DenseMatrix};

/// Relative tolerance on `max |D - D^T|` for diagonal blocks, scaled by the
/// block's max-abs entry.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Symmetric positive definite block-tridiagonal matrix with `N` diagonal
/// blocks of order `n`.
///
/// Only the diagonal blocks `A_{i,i}` and the sub-diagonal blocks
/// `A_{i+1,i}` are stored; the super-diagonal is implied by symmetry. Each
/// sequence lives in one contiguous arena with stride `n * n`, blocks
/// row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTridiagonalMatrix {
    num_blocks: usize,
    block_dim: usize,
    diag: Vec<f64>,
    sub: Vec<f64>,
}

impl BlockTridiagonalMatrix {
    /// Builds a matrix from its diagonal and sub-diagonal arenas.
    ///
    /// Each diagonal block is checked for symmetry against
    /// [`SYMMETRY_TOLERANCE`] and replaced by `(D + D^T) / 2`.
    pub fn new(num_blocks: usize, block_dim: usize, diag: Vec<f64>, sub: Vec<f64>) -> Result<Self> {
        if num_blocks == 0 || block_dim == 0 {
            return Err(Error::InvalidDimensions(format!(
                "block count and block order must be positive (got N={num_blocks}, n={block_dim})"
            )));
        }
        let bb = block_dim * block_dim;
        if diag.len() != num_blocks * bb {
            return Err(Error::DimensionMismatch {
                context: "diagonal arena length",
                expected: num_blocks * bb,
                found: diag.len(),
            });
        }
        if sub.len() != (num_blocks - 1) * bb {
            return Err(Error::DimensionMismatch {
                context: "sub-diagonal arena length",
                expected: (num_blocks - 1) * bb,
                found: sub.len(),
            });
        }
        let mut a = BlockTridiagonalMatrix {
            num_blocks,
            block_dim,
            diag,
            sub,
        };
        for i in 0..num_blocks {
            let d = a.diag_block(i);
            let asymmetry = max_asymmetry(d);
            let limit = SYMMETRY_TOLERANCE * d.max_abs();
            if asymmetry > limit || asymmetry.is_nan() {
                return Err(Error::AsymmetricBlock {
                    block: i,
                    asymmetry,
                    limit,
                });
            }
        }
        a.symmetrize_diagonal();
        Ok(a)
    }

    /// Builds a matrix from per-block dense matrices.
    pub fn from_blocks(diag: &[DenseMatrix], sub: &[DenseMatrix]) -> Result<Self> {
        let num_blocks = diag.len();
        if num_blocks == 0 {
            return Err(Error::InvalidDimensions("no diagonal blocks".into()));
        }
        if sub.len() + 1 != num_blocks {
            return Err(Error::DimensionMismatch {
                context: "sub-diagonal block count",
                expected: num_blocks - 1,
                found: sub.len(),
            });
        }
        let n = diag[0].rows();
        for b in diag.iter().chain(sub) {
            if b.rows() != n || b.cols() != n {
                return Err(Error::DimensionMismatch {
                    context: "block shape",
                    expected: n,
                    found: if b.rows() != n { b.rows() } else { b.cols() },
                });
            }
        }
        let flat = |blocks: &[DenseMatrix]| blocks.iter().flat_map(|b| b.as_slice().iter().copied()).collect();
        Self::new(num_blocks, n, flat(diag), flat(sub))
    }

    /// Wraps arenas produced internally (factors, Schur complements) without
    /// validation.
    pub(crate) fn from_parts_unchecked(num_blocks: usize, block_dim: usize, diag: Vec<f64>, sub: Vec<f64>) -> Self {
        debug_assert_eq!(diag.len(), num_blocks * block_dim * block_dim);
        debug_assert_eq!(sub.len(), num_blocks.saturating_sub(1) * block_dim * block_dim);
        BlockTridiagonalMatrix {
            num_blocks,
            block_dim,
            diag,
            sub,
        }
    }

    pub fn identity(num_blocks: usize, block_dim: usize) -> Self {
        let n = block_dim;
        let mut diag = vec![0.0; num_blocks * n * n];
        for b in diag.chunks_exact_mut(n * n) {
            for i in 0..n {
                b[i * n + i] = 1.0;
            }
        }
        Self::from_parts_unchecked(num_blocks, n, diag, vec![0.0; num_blocks.saturating_sub(1) * n * n])
    }

    /// Number of block rows `N`.
    pub fn num_blocks(&self) -> usize {
        self.num_blocks
    }

    /// Block order `n`.
    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    /// Order of the assembled matrix, `N * n`.
    pub fn dim(&self) -> usize {
        self.num_blocks * self.block_dim
    }

    /// `A_{i,i}` (0-based).
    pub fn diag_block(&self, i: usize) -> MatRef<'_> {
        let bb = self.block_dim * self.block_dim;
        MatRef::new(&self.diag[i * bb..(i + 1) * bb], self.block_dim, self.block_dim)
    }

    /// `A_{i+1,i}` (0-based), for `i < N - 1`.
    pub fn sub_block(&self, i: usize) -> MatRef<'_> {
        let bb = self.block_dim * self.block_dim;
        MatRef::new(&self.sub[i * bb..(i + 1) * bb], self.block_dim, self.block_dim)
    }

    pub fn diag_block_mut(&mut self, i: usize) -> MatMut<'_> {
        let bb = self.block_dim * self.block_dim;
        MatMut::new(&mut self.diag[i * bb..(i + 1) * bb], self.block_dim, self.block_dim)
    }

    pub fn sub_block_mut(&mut self, i: usize) -> MatMut<'_> {
        let bb = self.block_dim * self.block_dim;
        MatMut::new(&mut self.sub[i * bb..(i + 1) * bb], self.block_dim, self.block_dim)
    }

    pub fn diag_arena(&self) -> &[f64] {
        &self.diag
    }

    pub fn sub_arena(&self) -> &[f64] {
        &self.sub
    }

    /// Mutable access to both arenas at once.
    pub(crate) fn arenas_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.diag, &mut self.sub)
    }

    /// Largest absolute entry over all stored blocks.
    pub fn max_abs(&self) -> f64 {
        self.diag.iter().chain(&self.sub).fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    fn symmetrize_diagonal(&mut self) {
        let n = self.block_dim;
        for b in self.diag.chunks_exact_mut(n * n) {
            for i in 0..n {
                for j in 0..i {
                    let avg = 0.5 * (b[i * n + j] + b[j * n + i]);
                    b[i * n + j] = avg;
                    b[j * n + i] = avg;
                }
            }
        }
    }

    /// Materializes the full `Nn x Nn` symmetric matrix.
    pub fn assemble_dense(&self) -> DenseMatrix {
        let n = self.block_dim;
        let mut out = DenseMatrix::zeros(self.dim(), self.dim());
        for b in 0..self.num_blocks {
            let d = self.diag_block(b);
            for i in 0..n {
                for j in 0..n {
                    out[(b * n + i, b * n + j)] = d.get(i, j);
                }
            }
        }
        for b in 0..self.num_blocks.saturating_sub(1) {
            let s = self.sub_block(b);
            let (r0, c0) = ((b + 1) * n, b * n);
            for i in 0..n {
                for j in 0..n {
                    let v = s.get(i, j);
                    out[(r0 + i, c0 + j)] = v;
                    out[(c0 + j, r0 + i)] = v;
                }
            }
        }
        out
    }

    /// Block sparse product `A X`.
    pub fn apply(&self, x: &BlockRhs) -> Result<BlockRhs> {
        self.check_conformal(x)?;
        let n_blocks = self.num_blocks;
        let mut y = BlockRhs::zeros(n_blocks, self.block_dim, x.cols());
        for i in 0..n_blocks {
            let mut yi = y.block_mut(i);
            let kernel = |r: std::result::Result<(), _>| r.expect("conformal shapes");
            kernel(gemm_acc(
                yi.reborrow(),
                self.diag_block(i),
                x.block(i),
                Op::NoTrans,
                Op::NoTrans,
                1.0,
                1.0,
            ));
            if i > 0 {
                kernel(gemm_acc(
                    yi.reborrow(),
                    self.sub_block(i - 1),
                    x.block(i - 1),
                    Op::NoTrans,
                    Op::NoTrans,
                    1.0,
                    1.0,
                ));
            }
            if i + 1 < n_blocks {
                kernel(gemm_acc(
                    yi.reborrow(),
                    self.sub_block(i),
                    x.block(i + 1),
                    Op::Trans,
                    Op::NoTrans,
                    1.0,
                    1.0,
                ));
            }
        }
        Ok(y)
    }

    pub(crate) fn check_conformal(&self, b: &BlockRhs) -> Result<()> {
        if b.num_blocks() != self.num_blocks {
            return Err(Error::DimensionMismatch {
                context: "right-hand side block count",
                expected: self.num_blocks,
                found: b.num_blocks(),
            });
        }
        if b.block_dim() != self.block_dim {
            return Err(Error::DimensionMismatch {
                context: "right-hand side block rows",
                expected: self.block_dim,
                found: b.block_dim(),
            });
        }
        Ok(())
    }
}

/// `max |D - D^T|` of a square block.
pub(crate) fn max_asymmetry(d: MatRef<'_>) -> f64 {
    let n = d.rows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..i {
            worst = worst.max((d.get(i, j) - d.get(j, i)).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_legal_instance() {
        let a = BlockTridiagonalMatrix::new(1, 1, vec![4.0], vec![]).unwrap();
        assert_eq!(a.num_blocks(), 1);
        assert_eq!(a.assemble_dense().as_slice(), &[4.0]);
    }

    #[test]
    fn two_scalar_blocks_assemble() {
        let a = BlockTridiagonalMatrix::new(2, 1, vec![4.0, 5.0], vec![2.0]).unwrap();
        assert_eq!(a.assemble_dense().as_slice(), &[4.0, 2.0, 2.0, 5.0]);
    }

    #[test]
    fn block_count_mismatch_is_rejected() {
        let err =
            BlockTridiagonalMatrix::from_blocks(&[DenseMatrix::identity(1)], &[DenseMatrix::identity(1)]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
        let err = BlockTridiagonalMatrix::new(2, 1, vec![4.0], vec![2.0]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn zero_sizes_are_rejected() {
        assert!(matches!(
            BlockTridiagonalMatrix::new(0, 1, vec![], vec![]),
            Err(Error::InvalidDimensions(_))
        ));
    }

    #[test]
    fn asymmetric_diagonal_is_rejected_and_roundoff_symmetrized() {
        let err = BlockTridiagonalMatrix::new(1, 2, vec![2.0, 1.0, 0.5, 2.0], vec![]).unwrap_err();
        assert!(matches!(err, Error::AsymmetricBlock { block: 0, .. }));

        let eps = 1e-14;
        let a = BlockTridiagonalMatrix::new(1, 2, vec![2.0, 1.0 + eps, 1.0, 2.0], vec![]).unwrap();
        let d = a.diag_block(0);
        assert_eq!(d.get(0, 1), d.get(1, 0));
    }

    #[test]
    fn identity_assembles_to_identity() {
        let a = BlockTridiagonalMatrix::identity(3, 2);
        assert_eq!(a.assemble_dense(), DenseMatrix::identity(6));
    }

    #[test]
    fn apply_matches_dense_product() {
        let diag = vec![4.0, 1.0, 1.0, 5.0, 6.0, 0.5, 0.5, 7.0];
        let sub = vec![1.0, 2.0, 3.0, 4.0];
        let a = BlockTridiagonalMatrix::new(2, 2, diag, sub).unwrap();
        let x = BlockRhs::new(2, 2, 1, vec![1.0, -1.0, 2.0, 0.5]).unwrap();
        let y = a.apply(&x).unwrap();
        let dense = a.assemble_dense();
        for i in 0..4 {
            let expect: f64 = (0..4).map(|j| dense[(i, j)] * x.as_slice()[j]).sum();
            assert_eq!(y.as_slice()[i], expect);
        }
    }
}
