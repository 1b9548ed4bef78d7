use crate::error::{Error, Result};
use crate::kernels::{MatMut, MatRef};

use super::DenseMatrix;

/// Right-hand side or solution partitioned conformally with a
/// [`BlockTridiagonalMatrix`](super::BlockTridiagonalMatrix): `N` panels of
/// `n x d`, stored back to back, each row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockRhs {
    num_blocks: usize,
    block_dim: usize,
    cols: usize,
    data: Vec<f64>,
}

impl BlockRhs {
    pub fn new(num_blocks: usize, block_dim: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if num_blocks == 0 || block_dim == 0 || cols == 0 {
            return Err(Error::InvalidDimensions(format!(
                "right-hand side needs positive N, n and d (got {num_blocks}, {block_dim}, {cols})"
            )));
        }
        let expected = num_blocks * block_dim * cols;
        if data.len() != expected {
            return Err(Error::DimensionMismatch {
                context: "right-hand side length",
                expected,
                found: data.len(),
            });
        }
        Ok(BlockRhs {
            num_blocks,
            block_dim,
            cols,
            data,
        })
    }

    pub fn zeros(num_blocks: usize, block_dim: usize, cols: usize) -> Self {
        BlockRhs {
            num_blocks,
            block_dim,
            cols,
            data: vec![0.0; num_blocks * block_dim * cols],
        }
    }

    /// Splits an `Nn x d` dense matrix into `N` panels of `n` rows.
    pub fn from_dense(m: &DenseMatrix, block_dim: usize) -> Result<Self> {
        if block_dim == 0 || !m.rows().is_multiple_of(block_dim) {
            return Err(Error::DimensionMismatch {
                context: "dense rows divisible by block order",
                expected: block_dim,
                found: m.rows(),
            });
        }
        // Row-major Nn x d is exactly the stacked panel layout.
        Self::new(m.rows() / block_dim, block_dim, m.cols(), m.as_slice().to_vec())
    }

    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix::from_row_major(self.num_blocks * self.block_dim, self.cols, self.data.clone())
    }

    pub fn num_blocks(&self) -> usize {
        self.num_blocks
    }

    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    /// Column count `d`.
    pub fn cols(&self) -> usize {
        self.cols
    }

    fn panel_len(&self) -> usize {
        self.block_dim * self.cols
    }

    pub fn block(&self, i: usize) -> MatRef<'_> {
        let len = self.panel_len();
        MatRef::new(&self.data[i * len..(i + 1) * len], self.block_dim, self.cols)
    }

    pub fn block_mut(&mut self, i: usize) -> MatMut<'_> {
        let len = self.panel_len();
        MatMut::new(&mut self.data[i * len..(i + 1) * len], self.block_dim, self.cols)
    }

    /// Panel `i` mutably together with panel `j` read-only (`i != j`).
    pub(crate) fn block_pair(&mut self, i: usize, j: usize) -> (MatMut<'_>, MatRef<'_>) {
        assert_ne!(i, j);
        let len = self.panel_len();
        let (r, c) = (self.block_dim, self.cols);
        if i < j {
            let (lo, hi) = self.data.split_at_mut(j * len);
            (
                MatMut::new(&mut lo[i * len..(i + 1) * len], r, c),
                MatRef::new(&hi[..len], r, c),
            )
        } else {
            let (lo, hi) = self.data.split_at_mut(i * len);
            (
                MatMut::new(&mut hi[..len], r, c),
                MatRef::new(&lo[j * len..(j + 1) * len], r, c),
            )
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Column `c` as a flat vector of length `N n`.
    pub fn column(&self, c: usize) -> Vec<f64> {
        self.data.iter().skip(c).step_by(self.cols).copied().collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &BlockRhs) -> f64 {
        assert_eq!(self.data.len(), other.data.len());
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_round_trip_and_columns() {
        let m = DenseMatrix::from_fn(6, 2, |i, j| (10 * i + j) as f64);
        let b = BlockRhs::from_dense(&m, 3).unwrap();
        assert_eq!(b.num_blocks(), 2);
        assert_eq!(b.block(1).row(0), &[30.0, 31.0]);
        assert_eq!(b.column(1), vec![1.0, 11.0, 21.0, 31.0, 41.0, 51.0]);
        assert_eq!(b.to_dense(), m);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            BlockRhs::new(2, 2, 1, vec![0.0; 3]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn block_pair_either_order() {
        let mut b = BlockRhs::new(3, 1, 1, vec![1.0, 2.0, 3.0]).unwrap();
        let (mut dst, src) = b.block_pair(2, 0);
        dst.set(0, 0, src.get(0, 0) + 10.0);
        let (dst, src) = b.block_pair(0, 2);
        assert_eq!(src.get(0, 0), 11.0);
        assert_eq!(dst.get(0, 0), 1.0);
    }
}
