use crate::error::{Error, Result};
use crate::kernels::MatRef;
use crate::types::{BlockRhs, BlockTridiagonalMatrix, PartitionPlan, Segment, SegmentBatch};

use super::RecursionConfig;

/// Chooses separators for a system of `num_blocks` block rows.
///
/// Separators sit at `0, rho+1, 2(rho+1), ...` with the last index `N-1`
/// appended. If that would make the final separator adjacent to its
/// predecessor, the predecessor is dropped and the tail segment grows to
/// `rho + 1` blocks.
///
/// # Panics
///
/// If `num_blocks < 3`: two separators with a non-empty segment need at
/// least three block rows.
pub fn plan_partition(num_blocks: usize, cfg: &RecursionConfig) -> PartitionPlan {
    assert!(num_blocks >= 3, "cannot partition fewer than three block rows");
    let step = cfg.reduction_factor.max(1) + 1;
    let last = num_blocks - 1;
    let mut separators: Vec<usize> = (0..num_blocks).step_by(step).collect();
    if *separators.last().unwrap() != last {
        if *separators.last().unwrap() + 1 == last {
            separators.pop();
        }
        separators.push(last);
    }
    PartitionPlan::from_separators(num_blocks, separators).expect("separator rule yields a valid plan")
}

/// A level's system after the symmetric permutation: the interior segments
/// (with their couplings) and the separator diagonal blocks `A_ll`.
#[derive(Debug, Clone)]
pub struct SplitSystem {
    pub batch: SegmentBatch,
    /// `P` diagonal blocks of the separators, back to back.
    pub separator_diag: Vec<f64>,
}

impl SplitSystem {
    pub fn separator_block(&self, p: usize, n: usize) -> MatRef<'_> {
        MatRef::new(&self.separator_diag[p * n * n..(p + 1) * n * n], n, n)
    }
}

fn check_plan(a_blocks: usize, plan: &PartitionPlan) -> Result<()> {
    if plan.num_blocks() != a_blocks {
        return Err(Error::DimensionMismatch {
            context: "partition plan block count",
            expected: a_blocks,
            found: plan.num_blocks(),
        });
    }
    Ok(())
}

/// Copies each interior segment and its couplings out of `a`.
///
/// Each segment's `factor_f` is initialized to its coupling matrix `A_lu^(k)`
/// (`J_k` panels of `n x 2n`): `coupling_left` in the left half of the first
/// panel and `coupling_right^T` in the right half of the last panel, zero
/// elsewhere.
pub fn permute_split(a: &BlockTridiagonalMatrix, plan: &PartitionPlan) -> Result<SplitSystem> {
    check_plan(a.num_blocks(), plan)?;
    let n = a.block_dim();
    let bb = n * n;

    let separator_diag: Vec<f64> = plan
        .separators()
        .iter()
        .flat_map(|&s| a.diag_block(s).to_vec())
        .collect();

    let segments = plan
        .segments()
        .iter()
        .map(|range| {
            let (start, end) = (range.start, range.end);
            let len = end - start;
            let diag = a.diag_arena()[start * bb..end * bb].to_vec();
            let sub = a.sub_arena()[start * bb..(end - 1) * bb].to_vec();
            let interior = BlockTridiagonalMatrix::from_parts_unchecked(len, n, diag, sub);
            let coupling_left = a.sub_block(start - 1).to_vec();
            let coupling_right = a.sub_block(end - 1).to_vec();

            let mut factor_f = BlockRhs::zeros(len, n, 2 * n);
            factor_f
                .block_mut(0)
                .submatrix_mut(0, 0, n, n)
                .copy_from(a.sub_block(start - 1));
            let right_t = a.sub_block(end - 1).transpose_to_vec();
            factor_f
                .block_mut(len - 1)
                .submatrix_mut(0, n, n, n)
                .copy_from(MatRef::new(&right_t, n, n));

            Segment {
                range: range.clone(),
                interior,
                coupling_left,
                coupling_right,
                factor_f,
            }
        })
        .collect();

    Ok(SplitSystem {
        batch: SegmentBatch { block_dim: n, segments },
        separator_diag,
    })
}

/// Splits `b` into per-segment interior panels `B_u^(k)` and the separator
/// panels `B_l`.
pub fn split_rhs(b: &BlockRhs, plan: &PartitionPlan) -> Result<(Vec<BlockRhs>, BlockRhs)> {
    check_plan(b.num_blocks(), plan)?;
    let panel = b.block_dim() * b.cols();
    let data = b.as_slice();
    let interior = plan
        .segments()
        .iter()
        .map(|r| {
            BlockRhs::new(
                r.len(),
                b.block_dim(),
                b.cols(),
                data[r.start * panel..r.end * panel].to_vec(),
            )
            .expect("segment is non-empty")
        })
        .collect();
    let separators = plan
        .separators()
        .iter()
        .flat_map(|&s| data[s * panel..(s + 1) * panel].iter().copied())
        .collect();
    let separators = BlockRhs::new(plan.num_separators(), b.block_dim(), b.cols(), separators)?;
    Ok((interior, separators))
}

/// Merges interior and separator solutions back into the original block
/// ordering; the inverse of [`split_rhs`].
pub fn assemble_solution(x_u: &[BlockRhs], x_l: &BlockRhs, plan: &PartitionPlan) -> Result<BlockRhs> {
    if x_u.len() != plan.num_segments() {
        return Err(Error::DimensionMismatch {
            context: "interior solution count",
            expected: plan.num_segments(),
            found: x_u.len(),
        });
    }
    if x_l.num_blocks() != plan.num_separators() {
        return Err(Error::DimensionMismatch {
            context: "separator solution block count",
            expected: plan.num_separators(),
            found: x_l.num_blocks(),
        });
    }
    let (n, d) = (x_l.block_dim(), x_l.cols());
    let panel = n * d;
    let mut out = vec![0.0; plan.num_blocks() * panel];
    for (p, &s) in plan.separators().iter().enumerate() {
        out[s * panel..(s + 1) * panel].copy_from_slice(&x_l.as_slice()[p * panel..(p + 1) * panel]);
    }
    for (xk, r) in x_u.iter().zip(plan.segments()) {
        if xk.num_blocks() != r.len() || xk.block_dim() != n || xk.cols() != d {
            return Err(Error::DimensionMismatch {
                context: "interior solution shape",
                expected: r.len(),
                found: xk.num_blocks(),
            });
        }
        out[r.start * panel..r.end * panel].copy_from_slice(xk.as_slice());
    }
    BlockRhs::new(plan.num_blocks(), n, d, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::generate_spd_btd;

    fn plan(num_blocks: usize, rho: usize) -> PartitionPlan {
        plan_partition(num_blocks, &RecursionConfig::new(1, rho))
    }

    fn segments_one_based(p: &PartitionPlan) -> Vec<(usize, usize)> {
        p.segments().iter().map(|r| (r.start + 1, r.end)).collect()
    }

    #[test]
    fn nine_blocks_rho_three() {
        let p = plan(9, 3);
        assert_eq!(p.separators_one_based(), vec![1, 5, 9]);
        assert_eq!(segments_one_based(&p), vec![(2, 4), (6, 8)]);
    }

    #[test]
    fn seven_blocks_rho_two() {
        let p = plan(7, 2);
        assert_eq!(p.separators_one_based(), vec![1, 4, 7]);
        assert_eq!(segments_one_based(&p), vec![(2, 3), (5, 6)]);
    }

    #[test]
    fn ten_blocks_rho_three_merges_tail() {
        let p = plan(10, 3);
        assert_eq!(p.separators_one_based(), vec![1, 5, 10]);
        assert_eq!(segments_one_based(&p), vec![(2, 4), (6, 9)]);
    }

    #[test]
    fn plan_invariants_hold_over_a_range() {
        for rho in 1..7 {
            for nb in 3..80 {
                let p = plan(nb, rho);
                assert!(p.max_segment_len() <= 2 * rho.max(1));
                let mut lens: Vec<usize> = p.segments().iter().map(|r| r.len()).collect();
                let last = lens.pop().unwrap();
                assert!(lens.iter().all(|&l| l == rho), "N={nb} rho={rho}");
                assert!(last >= 1);
                assert!(p.num_separators() < nb);
            }
        }
    }

    #[test]
    fn split_of_nine_block_example() {
        let (a, _) = generate_spd_btd(9, 2, 1, 1);
        let p = plan(9, 3);
        let split = permute_split(&a, &p).unwrap();
        let seg = &split.batch.segments()[0];
        assert_eq!(seg.range(), 1..4);
        for i in 0..3 {
            assert_eq!(seg.interior().diag_block(i).to_vec(), a.diag_block(1 + i).to_vec());
        }
        // A_{2,1} and A_{5,4} in 1-based numbering
        assert_eq!(seg.coupling_left().to_vec(), a.sub_block(0).to_vec());
        assert_eq!(seg.coupling_right().to_vec(), a.sub_block(3).to_vec());
        assert_eq!(split.separator_block(1, 2).to_vec(), a.diag_block(4).to_vec());
    }

    #[test]
    fn identity_splits_into_identities() {
        let a = BlockTridiagonalMatrix::identity(9, 2);
        let split = permute_split(&a, &plan(9, 3)).unwrap();
        for seg in split.batch.segments() {
            assert_eq!(seg.interior(), &BlockTridiagonalMatrix::identity(3, 2));
            assert!(seg.coupling_left().to_vec().iter().all(|&v| v == 0.0));
            assert!(seg.coupling_right().to_vec().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn nine_block_assemble_layout() {
        let p = plan(9, 3);
        let x_l = BlockRhs::new(3, 1, 1, vec![1.0, 5.0, 9.0]).unwrap();
        let x_u = vec![
            BlockRhs::new(3, 1, 1, vec![2.0, 3.0, 4.0]).unwrap(),
            BlockRhs::new(3, 1, 1, vec![6.0, 7.0, 8.0]).unwrap(),
        ];
        let x = assemble_solution(&x_u, &x_l, &p).unwrap();
        assert_eq!(x.as_slice(), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]);
    }

    #[test]
    fn split_assemble_round_trip() {
        let (_, b) = generate_spd_btd(23, 3, 2, 4);
        let p = plan(23, 4);
        let (u, l) = split_rhs(&b, &p).unwrap();
        let back = assemble_solution(&u, &l, &p).unwrap();
        assert_eq!(back, b);
        let (u2, l2) = split_rhs(&back, &p).unwrap();
        assert_eq!(u2, u);
        assert_eq!(l2, l);
    }

    #[test]
    fn mismatched_plan_is_rejected() {
        let (a, b) = generate_spd_btd(10, 1, 1, 4);
        let p = plan(9, 3);
        assert!(permute_split(&a, &p).is_err());
        assert!(split_rhs(&b, &p).is_err());
    }
}
