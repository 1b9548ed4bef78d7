//! Batched block-Cholesky factorization and block forward/backward solve for
//! collections of independent block-tridiagonal systems.
//!
//! After factorization a system's diagonal blocks hold `L_{j,j}` (strict
//! upper triangle zeroed) and its sub-diagonal blocks hold
//! `L_{j+1,j} = A_{j+1,j} L_{j,j}^{-T}`, so that `A = L L^T` with `L` block
//! lower-bidiagonal.
//!
//! Members may have different block counts. Each sweep runs up to the longest
//! member and members drop out of a step once they are exhausted; backward
//! sweeps are aligned on each member's last block.

use crate::error::{Error, KernelError, Result};
use crate::kernels::{batched, chol_factor, gemm_acc, trsm_lower, BatchPolicy, MatMut, MatRef, Op, TriSolve};
use crate::types::{BlockRhs, BlockTridiagonalMatrix};

/// A kernel failure located at (member, block) of a batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct BlockFailure {
    pub member: usize,
    pub block: usize,
    pub source: KernelError,
}

impl BlockFailure {
    pub(crate) fn into_error(self, matrix: &'static str, level: usize) -> Error {
        Error::from_kernel(self.source, matrix, level, self.member, self.block)
    }
}

fn block_view(arena: &[f64], i: usize, n: usize) -> MatRef<'_> {
    MatRef::new(&arena[i * n * n..(i + 1) * n * n], n, n)
}

fn block_view_mut(arena: &mut [f64], i: usize, n: usize) -> MatMut<'_> {
    MatMut::new(&mut arena[i * n * n..(i + 1) * n * n], n, n)
}

/// Runs one batched kernel over the members listed in `ids`, mapping a batch
/// failure back to the original member index.
fn run_step<T: Send>(
    policy: BatchPolicy,
    ids: &[usize],
    block: usize,
    work: &mut [T],
    op: impl Fn(&mut T) -> std::result::Result<(), KernelError> + Sync,
) -> std::result::Result<(), BlockFailure> {
    batched(policy, work, op).map_err(|e| BlockFailure {
        member: ids[e.member],
        block,
        source: e.source,
    })
}

pub(crate) fn factorize_members(
    policy: BatchPolicy,
    systems: &mut [&mut BlockTridiagonalMatrix],
) -> std::result::Result<(), BlockFailure> {
    let Some(first) = systems.first() else {
        return Ok(());
    };
    let n = first.block_dim();
    assert!(
        systems.iter().all(|s| s.block_dim() == n),
        "mixed block orders in batch"
    );
    let max_len = systems.iter().map(|s| s.num_blocks()).max().unwrap_or(0);

    // potrf on the first diagonal block of every member
    {
        let ids: Vec<usize> = (0..systems.len()).collect();
        let mut work: Vec<MatMut<'_>> = systems.iter_mut().map(|s| s.diag_block_mut(0)).collect();
        run_step(policy, &ids, 0, &mut work, |d| chol_factor(d.reborrow()))?;
    }

    for j in 0..max_len.saturating_sub(1) {
        let ids: Vec<usize> = (0..systems.len())
            .filter(|&k| systems[k].num_blocks() > j + 1)
            .collect();
        let mut arenas: Vec<(&mut [f64], &mut [f64])> = systems
            .iter_mut()
            .filter(|s| s.num_blocks() > j + 1)
            .map(|s| s.arenas_mut())
            .collect();

        // L_{j+1,j} = A_{j+1,j} L_{j,j}^{-T}
        {
            let mut work: Vec<(MatRef<'_>, MatMut<'_>)> = arenas
                .iter_mut()
                .map(|(diag, sub)| (block_view(diag, j, n), block_view_mut(sub, j, n)))
                .collect();
            run_step(policy, &ids, j + 1, &mut work, |(l, s)| {
                trsm_lower(*l, s.reborrow(), TriSolve::RightTranspose)
            })?;
        }
        // A_{j+1,j+1} -= L_{j+1,j} L_{j+1,j}^T
        {
            let mut work: Vec<(MatMut<'_>, MatRef<'_>)> = arenas
                .iter_mut()
                .map(|(diag, sub)| (block_view_mut(diag, j + 1, n), block_view(sub, j, n)))
                .collect();
            run_step(policy, &ids, j + 1, &mut work, |(d, s)| {
                gemm_acc(d.reborrow(), *s, *s, Op::NoTrans, Op::Trans, -1.0, 1.0)
            })?;
        }
        // potrf on A_{j+1,j+1}
        {
            let mut work: Vec<MatMut<'_>> = arenas
                .iter_mut()
                .map(|(diag, _)| block_view_mut(diag, j + 1, n))
                .collect();
            run_step(policy, &ids, j + 1, &mut work, |d| chol_factor(d.reborrow()))?;
        }
    }
    Ok(())
}

pub(crate) fn solve_members(
    policy: BatchPolicy,
    systems: &[&BlockTridiagonalMatrix],
    rhs: &mut [&mut BlockRhs],
) -> std::result::Result<(), BlockFailure> {
    assert_eq!(systems.len(), rhs.len(), "one right-hand side per system");
    let max_len = systems.iter().map(|s| s.num_blocks()).max().unwrap_or(0);

    // Forward substitution: Y_1 = L_11^{-1} B_1, then
    // Y_j = L_jj^{-1} (B_j - L_{j,j-1} Y_{j-1}).
    for j in 0..max_len {
        let ids: Vec<usize> = (0..systems.len()).filter(|&k| systems[k].num_blocks() > j).collect();
        if j > 0 {
            let mut work: Vec<(MatRef<'_>, MatMut<'_>, MatRef<'_>)> = ids
                .iter()
                .zip(rhs.iter_mut().enumerate().filter(|(k, _)| systems[*k].num_blocks() > j))
                .map(|(&k, (_, b))| {
                    let (bj, prev) = b.block_pair(j, j - 1);
                    (systems[k].sub_block(j - 1), bj, prev)
                })
                .collect();
            run_step(policy, &ids, j, &mut work, |(l, bj, prev)| {
                gemm_acc(bj.reborrow(), *l, *prev, Op::NoTrans, Op::NoTrans, -1.0, 1.0)
            })?;
        }
        let mut work: Vec<(MatRef<'_>, MatMut<'_>)> = ids
            .iter()
            .zip(rhs.iter_mut().enumerate().filter(|(k, _)| systems[*k].num_blocks() > j))
            .map(|(&k, (_, b))| (systems[k].diag_block(j), b.block_mut(j)))
            .collect();
        run_step(policy, &ids, j, &mut work, |(l, bj)| {
            trsm_lower(*l, bj.reborrow(), TriSolve::Left)
        })?;
    }

    // Backward substitution, step t handles block J_k - 1 - t of member k:
    // X_J = L_JJ^{-T} Y_J, X_j = L_jj^{-T} (Y_j - L_{j+1,j}^T X_{j+1}).
    for t in 0..max_len {
        let ids: Vec<usize> = (0..systems.len()).filter(|&k| systems[k].num_blocks() > t).collect();
        let block_of = |k: usize| systems[k].num_blocks() - 1 - t;
        // Members in one step sit at different block indices; failures report
        // the step's offset from the end.
        if t > 0 {
            let mut work: Vec<(MatRef<'_>, MatMut<'_>, MatRef<'_>)> = ids
                .iter()
                .zip(rhs.iter_mut().enumerate().filter(|(k, _)| systems[*k].num_blocks() > t))
                .map(|(&k, (_, b))| {
                    let j = block_of(k);
                    let (bj, next) = b.block_pair(j, j + 1);
                    (systems[k].sub_block(j), bj, next)
                })
                .collect();
            run_step(policy, &ids, t, &mut work, |(l, bj, next)| {
                gemm_acc(bj.reborrow(), *l, *next, Op::Trans, Op::NoTrans, -1.0, 1.0)
            })?;
        }
        let mut work: Vec<(MatRef<'_>, MatMut<'_>)> = ids
            .iter()
            .zip(rhs.iter_mut().enumerate().filter(|(k, _)| systems[*k].num_blocks() > t))
            .map(|(&k, (_, b))| {
                let j = block_of(k);
                (systems[k].diag_block(j), b.block_mut(j))
            })
            .collect();
        run_step(policy, &ids, t, &mut work, |(l, bj)| {
            trsm_lower(*l, bj.reborrow(), TriSolve::LeftTranspose)
        })?;
    }
    Ok(())
}

/// Factorizes every member in place.
///
/// A failed pivot is reported as `NotPositiveDefinite` at level 0 with the
/// member and block where it occurred; members are left partially factored.
pub fn factorize_btd_batch(policy: BatchPolicy, systems: &mut [&mut BlockTridiagonalMatrix]) -> Result<()> {
    factorize_members(policy, systems).map_err(|f| f.into_error("block-tridiagonal system", 0))
}

/// Solves every factored member against its right-hand side, in place.
pub fn solve_btd_batch(
    policy: BatchPolicy,
    systems: &[&BlockTridiagonalMatrix],
    rhs: &mut [&mut BlockRhs],
) -> Result<()> {
    if systems.len() != rhs.len() {
        return Err(Error::DimensionMismatch {
            context: "right-hand side count",
            expected: systems.len(),
            found: rhs.len(),
        });
    }
    for (s, b) in systems.iter().zip(rhs.iter()) {
        s.check_conformal(b)?;
    }
    solve_members(policy, systems, rhs).map_err(|f| f.into_error("block-tridiagonal factor", 0))
}

/// Serial block-Cholesky factorization: the batched sweep with one member.
pub fn serial_factorize(a: &mut BlockTridiagonalMatrix) -> Result<()> {
    factorize_btd_batch(BatchPolicy::Sequential, &mut [a])
}

/// Serial block forward/backward solve against factors from
/// [`serial_factorize`].
pub fn serial_solve(factor: &BlockTridiagonalMatrix, b: &mut BlockRhs) -> Result<()> {
    solve_btd_batch(BatchPolicy::Sequential, &[factor], &mut [b])
}

/// Owned serial block-Cholesky factorization of a matrix.
#[derive(Debug, Clone)]
pub struct BlockCholesky {
    factor: BlockTridiagonalMatrix,
}

impl BlockCholesky {
    /// Factorizes a copy of `a`; the input is left untouched.
    pub fn factorize(a: &BlockTridiagonalMatrix) -> Result<Self> {
        let mut factor = a.clone();
        serial_factorize(&mut factor)?;
        Ok(BlockCholesky { factor })
    }

    pub fn solve(&self, b: &BlockRhs) -> Result<BlockRhs> {
        let mut x = b.clone();
        serial_solve(&self.factor, &mut x)?;
        Ok(x)
    }

    /// Factor blocks: `L_{j,j}` on the diagonal, `L_{j+1,j}` below it.
    pub fn factor(&self) -> &BlockTridiagonalMatrix {
        &self.factor
    }
}
