use crate::error::{Error, Result};
use crate::kernels::{batched, gemm_acc, BatchPolicy, MatMut, MatRef, Op};
use crate::types::{BlockRhs, BlockTridiagonalMatrix, PartitionPlan, SegmentBatch};

fn check_batch(batch: &SegmentBatch, plan: &PartitionPlan) -> Result<()> {
    if batch.len() != plan.num_segments() {
        return Err(Error::DimensionMismatch {
            context: "segment count",
            expected: plan.num_segments(),
            found: batch.len(),
        });
    }
    Ok(())
}

/// Forms `S = A_ll - Assemble({(A_lu^(k))^T F^(k)})`.
///
/// `separator_diag` holds the `P` separator diagonal blocks. Each segment
/// contributes the 2n x 2n block `(A_lu^(k))^T F^(k)`, whose quadrants update
/// `S` at `(s_k, s_k)`, `(s_{k+1}, s_k)` and `(s_{k+1}, s_{k+1})`; separators
/// shared by two segments accumulate both contributions. Requires each
/// segment's `factor_f` to hold `(A_uu^(k))^{-1} A_lu^(k)`.
pub fn compute_schur(
    separator_diag: &[f64],
    batch: &SegmentBatch,
    plan: &PartitionPlan,
    policy: BatchPolicy,
) -> Result<BlockTridiagonalMatrix> {
    check_batch(batch, plan)?;
    let n = batch.block_dim();
    let bb = n * n;
    let p = plan.num_separators();
    if separator_diag.len() != p * bb {
        return Err(Error::DimensionMismatch {
            context: "separator diagonal arena",
            expected: p * bb,
            found: separator_diag.len(),
        });
    }

    // Only the first and last block rows of A_lu^(k) are nonzero, so the
    // product reduces to two n x 2n panels per segment:
    //   top    = coupling_left^T F_first
    //   bottom = coupling_right  F_last
    let mut updates: Vec<(Vec<f64>, Vec<f64>)> = vec![(vec![0.0; 2 * bb], vec![0.0; 2 * bb]); batch.len()];
    {
        let mut work: Vec<_> = updates.iter_mut().zip(batch.segments()).collect();
        batched(policy, &mut work, |((top, bottom), seg)| {
            let f = seg.factor_f();
            gemm_acc(
                MatMut::new(top, n, 2 * n),
                seg.coupling_left(),
                f.block(0),
                Op::Trans,
                Op::NoTrans,
                1.0,
                0.0,
            )?;
            gemm_acc(
                MatMut::new(bottom, n, 2 * n),
                seg.coupling_right(),
                f.block(seg.len() - 1),
                Op::NoTrans,
                Op::NoTrans,
                1.0,
                0.0,
            )
        })
        .map_err(|e| Error::from_batch(e, "Schur complement update", 0, 0))?;
    }

    let mut diag = separator_diag.to_vec();
    let mut sub = vec![0.0; (p - 1) * bb];
    for (k, (top, bottom)) in updates.iter().enumerate() {
        let top = MatRef::new(top, n, 2 * n);
        let bottom = MatRef::new(bottom, n, 2 * n);
        subtract_into(&mut diag[k * bb..(k + 1) * bb], top.submatrix(0, 0, n, n));
        subtract_into(&mut diag[(k + 1) * bb..(k + 2) * bb], bottom.submatrix(0, n, n, n));
        subtract_into(&mut sub[k * bb..(k + 1) * bb], bottom.submatrix(0, 0, n, n));
    }
    // Round-off leaves the diagonal updates asymmetric at the ulp level.
    for block in diag.chunks_exact_mut(bb) {
        for i in 0..n {
            for j in 0..i {
                let avg = 0.5 * (block[i * n + j] + block[j * n + i]);
                block[i * n + j] = avg;
                block[j * n + i] = avg;
            }
        }
    }
    Ok(BlockTridiagonalMatrix::from_parts_unchecked(p, n, diag, sub))
}

fn subtract_into(dst: &mut [f64], src: MatRef<'_>) {
    let n = src.cols();
    for i in 0..src.rows() {
        for (d, s) in dst[i * n..(i + 1) * n].iter_mut().zip(src.row(i)) {
            *d -= s;
        }
    }
}

/// Forms the separator right-hand side
/// `B̂_l = B_l + Assemble({-(F^(k))^T B_u^(k)})`.
pub fn compute_separator_rhs(
    batch: &SegmentBatch,
    b_u: &[BlockRhs],
    b_l: &BlockRhs,
    plan: &PartitionPlan,
    policy: BatchPolicy,
) -> Result<BlockRhs> {
    check_batch(batch, plan)?;
    if b_u.len() != batch.len() {
        return Err(Error::DimensionMismatch {
            context: "interior right-hand side count",
            expected: batch.len(),
            found: b_u.len(),
        });
    }
    if b_l.num_blocks() != plan.num_separators() {
        return Err(Error::DimensionMismatch {
            context: "separator right-hand side block count",
            expected: plan.num_separators(),
            found: b_l.num_blocks(),
        });
    }
    let n = batch.block_dim();
    let d = b_l.cols();
    for (seg, b) in batch.segments().iter().zip(b_u) {
        if b.num_blocks() != seg.len() || b.cols() != d || b.block_dim() != n {
            return Err(Error::DimensionMismatch {
                context: "interior right-hand side shape",
                expected: seg.len(),
                found: b.num_blocks(),
            });
        }
    }

    // b^(k) = -sum_j F_j^T B_j, a 2n x d panel per segment
    let mut contributions = vec![vec![0.0; 2 * n * d]; batch.len()];
    {
        let mut work: Vec<_> = contributions.iter_mut().zip(batch.segments().iter().zip(b_u)).collect();
        batched(policy, &mut work, |(out, (seg, b))| {
            let f = seg.factor_f();
            for j in 0..seg.len() {
                gemm_acc(
                    MatMut::new(out, 2 * n, d),
                    f.block(j),
                    b.block(j),
                    Op::Trans,
                    Op::NoTrans,
                    -1.0,
                    1.0,
                )?;
            }
            Ok(())
        })
        .map_err(|e| Error::from_batch(e, "separator right-hand side", 0, 0))?;
    }

    let mut out = b_l.clone();
    let panel = n * d;
    for (k, c) in contributions.iter().enumerate() {
        let data = out.as_mut_slice();
        for (dst, src) in data[k * panel..(k + 2) * panel].iter_mut().zip(c) {
            *dst += src;
        }
    }
    Ok(out)
}

/// Applies `B̂_u^(k) = B_u^(k) - A_lu^(k) X_l^(k)` in place.
///
/// Only the first block row (through `coupling_left` and the left
/// separator) and the last block row (through `coupling_right^T` and the
/// right separator) of each segment change.
pub fn update_boundary(
    batch: &SegmentBatch,
    b_u: &mut [BlockRhs],
    x_l: &BlockRhs,
    plan: &PartitionPlan,
    policy: BatchPolicy,
) -> Result<()> {
    check_batch(batch, plan)?;
    if b_u.len() != batch.len() {
        return Err(Error::DimensionMismatch {
            context: "interior right-hand side count",
            expected: batch.len(),
            found: b_u.len(),
        });
    }
    if x_l.num_blocks() != plan.num_separators() {
        return Err(Error::DimensionMismatch {
            context: "separator solution block count",
            expected: plan.num_separators(),
            found: x_l.num_blocks(),
        });
    }
    let mut work: Vec<_> = b_u.iter_mut().zip(batch.segments()).enumerate().collect();
    batched(policy, &mut work, |(k, (b, seg))| {
        let last = seg.len() - 1;
        gemm_acc(
            b.block_mut(0),
            seg.coupling_left(),
            x_l.block(*k),
            Op::NoTrans,
            Op::NoTrans,
            -1.0,
            1.0,
        )?;
        gemm_acc(
            b.block_mut(last),
            seg.coupling_right(),
            x_l.block(*k + 1),
            Op::Trans,
            Op::NoTrans,
            -1.0,
            1.0,
        )
    })
    .map_err(|e| Error::from_batch(e, "boundary update", 0, 0))
}
