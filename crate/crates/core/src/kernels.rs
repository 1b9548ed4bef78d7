//! Dense kernels: Cholesky factorization (`potrf`), triangular solve (`trsm`)
//! and multiply-accumulate (`gemm`), each in a single-matrix and a batched
//! form.
//!
//! Matrices are row-major views with an explicit row stride so that a block
//! inside a larger arena can be addressed without copying. Every scalar
//! operation the solver performs on matrix blocks goes through this module.

use rayon::prelude::*;

use crate::error::{BatchError, KernelError};

/// Matrices at or below this order use the unblocked Cholesky loop.
pub const UNBLOCKED_CHOLESKY_MAX: usize = 64;
/// Tile edge of the blocked Cholesky factorization.
pub const CHOLESKY_TILE: usize = 32;

#[derive(Debug, Clone, Copy)]
pub struct MatRef<'a> {
    data: &'a [f64],
    rows: usize,
    cols: usize,
    stride: usize,
}

#[derive(Debug)]
pub struct MatMut<'a> {
    data: &'a mut [f64],
    rows: usize,
    cols: usize,
    stride: usize,
}

#[inline]
fn required_len(rows: usize, cols: usize, stride: usize) -> usize {
    if rows == 0 || cols == 0 {
        0
    } else {
        (rows - 1) * stride + cols
    }
}

impl<'a> MatRef<'a> {
    /// View over a contiguous row-major `rows x cols` buffer.
    pub fn new(data: &'a [f64], rows: usize, cols: usize) -> Self {
        Self::with_stride(data, rows, cols, cols)
    }

    pub fn with_stride(data: &'a [f64], rows: usize, cols: usize, stride: usize) -> Self {
        assert!(stride >= cols, "row stride smaller than column count");
        assert!(
            data.len() >= required_len(rows, cols, stride),
            "buffer too small for {rows}x{cols} view with stride {stride}"
        );
        MatRef {
            data,
            rows,
            cols,
            stride,
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.stride + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &'a [f64] {
        let start = i * self.stride;
        &self.data[start..start + self.cols]
    }

    pub fn submatrix(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> MatRef<'a> {
        assert!(r0 + rows <= self.rows && c0 + cols <= self.cols);
        if rows == 0 || cols == 0 {
            return MatRef::with_stride(&[], rows, cols, self.stride.max(cols));
        }
        MatRef::with_stride(&self.data[r0 * self.stride + c0..], rows, cols, self.stride)
    }

    /// Copies the view into a contiguous row-major buffer.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.rows * self.cols);
        for i in 0..self.rows {
            out.extend_from_slice(self.row(i));
        }
        out
    }

    /// Copies the transpose into a contiguous row-major buffer.
    pub fn transpose_to_vec(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.rows * self.cols];
        for i in 0..self.rows {
            for (j, &v) in self.row(i).iter().enumerate() {
                out[j * self.rows + i] = v;
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        (0..self.rows)
            .flat_map(|i| self.row(i).iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

impl<'a> MatMut<'a> {
    pub fn new(data: &'a mut [f64], rows: usize, cols: usize) -> Self {
        Self::with_stride(data, rows, cols, cols)
    }

    pub fn with_stride(data: &'a mut [f64], rows: usize, cols: usize, stride: usize) -> Self {
        assert!(stride >= cols, "row stride smaller than column count");
        assert!(
            data.len() >= required_len(rows, cols, stride),
            "buffer too small for {rows}x{cols} view with stride {stride}"
        );
        MatMut {
            data,
            rows,
            cols,
            stride,
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.stride + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.stride + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let start = i * self.stride;
        &self.data[start..start + self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let start = i * self.stride;
        &mut self.data[start..start + self.cols]
    }

    /// Two distinct rows, the first mutable.
    #[inline]
    fn row_pair(&mut self, dst: usize, src: usize) -> (&mut [f64], &[f64]) {
        debug_assert_ne!(dst, src);
        let cols = self.cols;
        let (a, b) = (dst * self.stride, src * self.stride);
        if a < b {
            let (lo, hi) = self.data.split_at_mut(b);
            (&mut lo[a..a + cols], &hi[..cols])
        } else {
            let (lo, hi) = self.data.split_at_mut(a);
            (&mut hi[..cols], &lo[b..b + cols])
        }
    }

    pub fn as_ref(&self) -> MatRef<'_> {
        MatRef {
            data: self.data,
            rows: self.rows,
            cols: self.cols,
            stride: self.stride,
        }
    }

    pub fn reborrow(&mut self) -> MatMut<'_> {
        MatMut {
            data: self.data,
            rows: self.rows,
            cols: self.cols,
            stride: self.stride,
        }
    }

    pub fn submatrix_mut(&mut self, r0: usize, c0: usize, rows: usize, cols: usize) -> MatMut<'_> {
        assert!(r0 + rows <= self.rows && c0 + cols <= self.cols);
        let stride = self.stride;
        if rows == 0 || cols == 0 {
            return MatMut::with_stride(&mut [], rows, cols, stride.max(cols));
        }
        MatMut::with_stride(&mut self.data[r0 * stride + c0..], rows, cols, stride)
    }

    pub fn copy_from(&mut self, src: MatRef<'_>) {
        assert_eq!((self.rows, self.cols), (src.rows, src.cols));
        for i in 0..self.rows {
            self.row_mut(i).copy_from_slice(src.row(i));
        }
    }

    pub fn fill(&mut self, v: f64) {
        for i in 0..self.rows {
            self.row_mut(i).fill(v);
        }
    }
}

/// Which triangular system `trsm_lower` solves against a lower factor `L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriSolve {
    /// `B <- L^{-1} B`
    Left,
    /// `B <- L^{-T} B`
    LeftTranspose,
    /// `B <- B L^{-T}`
    RightTranspose,
}

/// Whether `gemm_acc` uses an operand as stored or transposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    NoTrans,
    Trans,
}

/// In-place Cholesky factorization of a symmetric matrix.
///
/// Only the lower triangle is read. On success the lower triangle holds `L`
/// with `M = L L^T` and the strict upper triangle is zeroed.
pub fn chol_factor(mut m: MatMut<'_>) -> Result<(), KernelError> {
    let n = m.rows();
    if m.cols() != n {
        return Err(KernelError::DimensionMismatch("cholesky of non-square block"));
    }
    if n <= UNBLOCKED_CHOLESKY_MAX {
        chol_unblocked(m.reborrow())?;
    } else {
        chol_blocked(m.reborrow())?;
    }
    for i in 0..n {
        m.row_mut(i)[i + 1..].fill(0.0);
    }
    Ok(())
}

// Left-looking, row-oriented: row i of L only needs rows < i.
fn chol_unblocked(mut m: MatMut<'_>) -> Result<(), KernelError> {
    let n = m.rows();
    for i in 0..n {
        for j in 0..=i {
            let (ri, rj) = if i == j {
                let r = m.row(i);
                (r, r)
            } else {
                let stride = m.stride;
                (&m.data[i * stride..i * stride + j], &m.data[j * stride..j * stride + j])
            };
            let dot: f64 = ri[..j].iter().zip(&rj[..j]).map(|(a, b)| a * b).sum();
            let v = m.get(i, j) - dot;
            if i == j {
                if v <= 0.0 || v.is_nan() {
                    return Err(KernelError::NotPositiveDefinite { pivot: i + 1 });
                }
                m.set(i, i, v.sqrt());
            } else {
                let d = m.get(j, j);
                m.set(i, j, v / d);
            }
        }
    }
    Ok(())
}

// Right-looking tiled factorization: factor the diagonal tile, solve the
// panel below it, then downdate the trailing matrix.
fn chol_blocked(mut m: MatMut<'_>) -> Result<(), KernelError> {
    let n = m.rows();
    let mut k = 0;
    while k < n {
        let kb = CHOLESKY_TILE.min(n - k);
        chol_unblocked(m.submatrix_mut(k, k, kb, kb)).map_err(|e| shift_pivot(e, k))?;
        let rest = n - k - kb;
        if rest > 0 {
            let diag = m.as_ref().submatrix(k, k, kb, kb).to_vec();
            let mut panel = m.as_ref().submatrix(k + kb, k, rest, kb).to_vec();
            trsm_lower(
                MatRef::new(&diag, kb, kb),
                MatMut::new(&mut panel, rest, kb),
                TriSolve::RightTranspose,
            )?;
            m.submatrix_mut(k + kb, k, rest, kb)
                .copy_from(MatRef::new(&panel, rest, kb));
            let p = MatRef::new(&panel, rest, kb);
            gemm_acc(
                m.submatrix_mut(k + kb, k + kb, rest, rest),
                p,
                p,
                Op::NoTrans,
                Op::Trans,
                -1.0,
                1.0,
            )?;
        }
        k += kb;
    }
    Ok(())
}

fn shift_pivot(e: KernelError, offset: usize) -> KernelError {
    match e {
        KernelError::NotPositiveDefinite { pivot } => KernelError::NotPositiveDefinite { pivot: pivot + offset },
        other => other,
    }
}

/// Triangular solve against a lower-triangular `L` with nonzero diagonal,
/// overwriting `B`. Entries of `L` above the diagonal are never read.
pub fn trsm_lower(l: MatRef<'_>, mut b: MatMut<'_>, mode: TriSolve) -> Result<(), KernelError> {
    let n = l.rows();
    if l.cols() != n {
        return Err(KernelError::DimensionMismatch("triangular factor not square"));
    }
    let conforming = match mode {
        TriSolve::Left | TriSolve::LeftTranspose => b.rows() == n,
        TriSolve::RightTranspose => b.cols() == n,
    };
    if !conforming {
        return Err(KernelError::DimensionMismatch("triangular solve operand"));
    }
    if let Some(i) = (0..n).find(|&i| l.get(i, i) == 0.0) {
        return Err(KernelError::SingularDiagonal { index: i + 1 });
    }
    match mode {
        TriSolve::Left => {
            for i in 0..n {
                for k in 0..i {
                    let lik = l.get(i, k);
                    if lik != 0.0 {
                        let (dst, src) = b.row_pair(i, k);
                        axpy(-lik, src, dst);
                    }
                }
                scale(1.0 / l.get(i, i), b.row_mut(i));
            }
        }
        TriSolve::LeftTranspose => {
            for i in (0..n).rev() {
                for k in i + 1..n {
                    let lki = l.get(k, i);
                    if lki != 0.0 {
                        let (dst, src) = b.row_pair(i, k);
                        axpy(-lki, src, dst);
                    }
                }
                scale(1.0 / l.get(i, i), b.row_mut(i));
            }
        }
        TriSolve::RightTranspose => {
            // X L^T = B  <=>  L X^T = B^T
            let m = b.rows();
            let mut t = b.as_ref().transpose_to_vec();
            trsm_lower(l, MatMut::new(&mut t, n, m), TriSolve::Left)?;
            let tv = MatRef::new(&t, n, m);
            for i in 0..m {
                for (j, dst) in b.row_mut(i).iter_mut().enumerate() {
                    *dst = tv.get(j, i);
                }
            }
        }
    }
    Ok(())
}

/// `C <- alpha * op(A) * op(B) + beta * C`.
pub fn gemm_acc(
    mut c: MatMut<'_>,
    a: MatRef<'_>,
    b: MatRef<'_>,
    op_a: Op,
    op_b: Op,
    alpha: f64,
    beta: f64,
) -> Result<(), KernelError> {
    let (m, q) = match op_a {
        Op::NoTrans => (a.rows(), a.cols()),
        Op::Trans => (a.cols(), a.rows()),
    };
    let (qb, p) = match op_b {
        Op::NoTrans => (b.rows(), b.cols()),
        Op::Trans => (b.cols(), b.rows()),
    };
    if q != qb || c.rows() != m || c.cols() != p {
        return Err(KernelError::DimensionMismatch("gemm operands"));
    }
    if beta != 1.0 {
        for i in 0..m {
            let row = c.row_mut(i);
            if beta == 0.0 {
                row.fill(0.0);
            } else {
                scale(beta, row);
            }
        }
    }
    if alpha == 0.0 || q == 0 {
        return Ok(());
    }
    // Row-major i-k-j order keeps the innermost loop contiguous; a transposed
    // right operand is packed once so the same loop applies.
    let packed;
    let b_rows = match op_b {
        Op::NoTrans => b,
        Op::Trans => {
            packed = b.transpose_to_vec();
            MatRef::new(&packed, q, p)
        }
    };
    for i in 0..m {
        let c_row = c.row_mut(i);
        for k in 0..q {
            let aik = match op_a {
                Op::NoTrans => a.get(i, k),
                Op::Trans => a.get(k, i),
            };
            if aik != 0.0 {
                axpy(alpha * aik, b_rows.row(k), c_row);
            }
        }
    }
    Ok(())
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
fn scale(alpha: f64, x: &mut [f64]) {
    for v in x {
        *v *= alpha;
    }
}

/// How batch members are scheduled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum BatchPolicy {
    /// Members run one after another on the calling thread.
    Sequential,
    /// Members run on the rayon pool with a join barrier at batch end.
    #[default]
    Parallel,
}

/// Applies `op` to every member of a batch.
///
/// The result is the same as a sequential loop over the members. On failure
/// the error of the lowest-indexed failing member is returned; other members
/// may have been partially written.
pub fn batched<T, F>(policy: BatchPolicy, members: &mut [T], op: F) -> Result<(), BatchError>
where
    T: Send,
    F: Fn(&mut T) -> Result<(), KernelError> + Sync,
{
    let tag = |member: usize, r: Result<(), KernelError>| r.map_err(|source| BatchError { member, source });
    match policy {
        BatchPolicy::Sequential => members.iter_mut().enumerate().try_for_each(|(k, m)| tag(k, op(m))),
        BatchPolicy::Parallel if members.len() <= 1 => {
            members.iter_mut().enumerate().try_for_each(|(k, m)| tag(k, op(m)))
        }
        BatchPolicy::Parallel => {
            let first = members
                .par_iter_mut()
                .enumerate()
                .filter_map(|(k, m)| tag(k, op(m)).err())
                .min_by_key(|e| e.member);
            first.map_or(Ok(()), Err)
        }
    }
}

/// `K` same-shaped matrices laid out back to back in one arena.
#[derive(Debug)]
pub struct KernelBatchView<'a> {
    arena: &'a mut [f64],
    count: usize,
    rows: usize,
    cols: usize,
}

impl<'a> KernelBatchView<'a> {
    pub fn new(arena: &'a mut [f64], count: usize, rows: usize, cols: usize) -> Self {
        assert_eq!(
            arena.len(),
            count * rows * cols,
            "arena size does not match batch shape"
        );
        KernelBatchView {
            arena,
            count,
            rows,
            cols,
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Base offset of member `k` within the arena.
    pub fn offset(&self, k: usize) -> usize {
        k * self.rows * self.cols
    }

    /// Splits the arena into disjoint per-member views.
    pub fn members(&mut self) -> Vec<MatMut<'_>> {
        let (rows, cols) = (self.rows, self.cols);
        let len = rows * cols;
        if len == 0 {
            return (0..self.count)
                .map(|_| MatMut::with_stride(&mut [], rows, cols, cols))
                .collect();
        }
        self.arena
            .chunks_exact_mut(len)
            .map(|c| MatMut::new(c, rows, cols))
            .collect()
    }

    pub fn member(&self, k: usize) -> MatRef<'_> {
        let len = self.rows * self.cols;
        MatRef::new(&self.arena[k * len..(k + 1) * len], self.rows, self.cols)
    }
}

/// Batched `potrf` over every member of `view`.
pub fn batched_chol(policy: BatchPolicy, view: &mut KernelBatchView<'_>) -> Result<(), BatchError> {
    let mut members = view.members();
    batched(policy, &mut members, |m| chol_factor(m.reborrow()))
}

/// Batched `trsm`: member `k` of `b` is solved against member `k` of `factors`.
pub fn batched_trsm(
    policy: BatchPolicy,
    factors: &KernelBatchView<'_>,
    b: &mut KernelBatchView<'_>,
    mode: TriSolve,
) -> Result<(), BatchError> {
    assert_eq!(factors.count(), b.count(), "batch sizes differ");
    let mut pairs: Vec<_> = (0..factors.count())
        .map(|k| factors.member(k))
        .zip(b.members())
        .collect();
    batched(policy, &mut pairs, |(l, x)| trsm_lower(*l, x.reborrow(), mode))
}

/// Batched `gemm`: `C_k <- alpha op(A_k) op(B_k) + beta C_k`.
#[allow(clippy::too_many_arguments)]
pub fn batched_gemm(
    policy: BatchPolicy,
    c: &mut KernelBatchView<'_>,
    a: &KernelBatchView<'_>,
    b: &KernelBatchView<'_>,
    op_a: Op,
    op_b: Op,
    alpha: f64,
    beta: f64,
) -> Result<(), BatchError> {
    assert!(a.count() == c.count() && b.count() == c.count(), "batch sizes differ");
    let mut triples: Vec<_> = c
        .members()
        .into_iter()
        .enumerate()
        .map(|(k, cm)| (cm, a.member(k), b.member(k)))
        .collect();
    batched(policy, &mut triples, |(cm, am, bm)| {
        gemm_acc(cm.reborrow(), *am, *bm, op_a, op_b, alpha, beta)
    })
}
