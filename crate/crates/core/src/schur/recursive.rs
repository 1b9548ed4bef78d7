use crate::block_cholesky::{factorize_members, solve_members};
use crate::error::{Error, Result};
use crate::types::{BlockRhs, BlockTridiagonalMatrix, FactorHierarchy, Level};

use super::{
    assemble_solution, compute_schur, compute_separator_rhs, permute_split, plan_partition, split_rhs, update_boundary,
    RecursionConfig,
};

/// Factorizes `a` into a hierarchy of batched interior factors and a serially
/// factored base system. The input matrix is not modified.
///
/// Each level partitions the current system, factorizes its interior
/// segments as one batch, solves `A_uu F = A_lu` for the intermediate factor
/// (the coupling columns form a `2n`-column right-hand side), forms the
/// Schur complement over the separators and continues with it. A failed pivot
/// is reported with its level, segment and block.
pub fn recursive_factorize(a: &BlockTridiagonalMatrix, cfg: &RecursionConfig) -> Result<FactorHierarchy> {
    cfg.validate()?;
    let policy = cfg.policy;
    let mut levels = Vec::new();
    let mut current = a.clone();

    while cfg.should_recurse(current.num_blocks()) {
        if levels.len() == cfg.max_levels {
            return Err(Error::LevelOverflow {
                max_levels: cfg.max_levels,
            });
        }
        let depth = levels.len();
        let plan = plan_partition(current.num_blocks(), cfg);
        let mut split = permute_split(&current, &plan)?;
        let segments = &mut split.batch.segments;

        {
            let mut interiors: Vec<_> = segments.iter_mut().map(|s| &mut s.interior).collect();
            factorize_members(policy, &mut interiors).map_err(|f| f.into_error("interior segment", depth))?;
        }
        {
            let (interiors, mut fs): (Vec<_>, Vec<_>) =
                segments.iter_mut().map(|s| (&s.interior, &mut s.factor_f)).unzip();
            solve_members(policy, &interiors, &mut fs).map_err(|f| f.into_error("interior segment", depth))?;
        }

        let schur = compute_schur(&split.separator_diag, &split.batch, &plan, policy)?;
        levels.push(Level {
            plan,
            batch: split.batch,
            schur: cfg.keep_schur.then(|| schur.clone()),
        });
        current = schur;
    }

    let depth = levels.len();
    factorize_members(policy, &mut [&mut current]).map_err(|f| {
        let matrix = if depth == 0 {
            "block-tridiagonal system"
        } else {
            "Schur complement"
        };
        f.into_error(matrix, depth)
    })?;

    Ok(FactorHierarchy {
        num_blocks: a.num_blocks(),
        block_dim: a.block_dim(),
        levels,
        base: current,
        policy,
    })
}

/// Solves `A X = B` with a hierarchy from [`recursive_factorize`].
///
/// Descends through the levels forming separator right-hand sides, solves
/// the base system, then ascends: boundary update, batched interior solve and
/// reassembly into the original block ordering. The hierarchy is only read,
/// so one hierarchy serves any number of right-hand sides.
pub fn recursive_solve(h: &FactorHierarchy, b: &BlockRhs) -> Result<BlockRhs> {
    if b.num_blocks() != h.num_blocks || b.block_dim() != h.block_dim {
        return Err(Error::DimensionMismatch {
            context: "right-hand side for hierarchy",
            expected: h.num_blocks,
            found: b.num_blocks(),
        });
    }
    let policy = h.policy;
    let mut interior_rhs = Vec::with_capacity(h.levels.len());
    let mut current = b.clone();

    for level in &h.levels {
        let (b_u, b_l) = split_rhs(&current, &level.plan)?;
        current = compute_separator_rhs(&level.batch, &b_u, &b_l, &level.plan, policy)?;
        interior_rhs.push(b_u);
    }

    let depth = h.levels.len();
    solve_members(policy, &[&h.base], &mut [&mut current]).map_err(|f| f.into_error("base factor", depth))?;

    for (depth, level) in h.levels.iter().enumerate().rev() {
        let mut b_u = interior_rhs.pop().expect("one interior right-hand side per level");
        update_boundary(&level.batch, &mut b_u, &current, &level.plan, policy)?;
        {
            let interiors: Vec<_> = level.batch.segments().iter().map(|s| &s.interior).collect();
            let mut refs: Vec<_> = b_u.iter_mut().collect();
            solve_members(policy, &interiors, &mut refs).map_err(|f| f.into_error("interior segment", depth))?;
        }
        current = assemble_solution(&b_u, &current, &level.plan)?;
    }
    Ok(current)
}

impl FactorHierarchy {
    /// Convenience for [`recursive_solve`].
    pub fn solve(&self, b: &BlockRhs) -> Result<BlockRhs> {
        recursive_solve(self, b)
    }
}
