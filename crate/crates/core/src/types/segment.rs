use std::ops::Range;

use crate::kernels::{BatchPolicy, MatRef};

use super::{BlockRhs, BlockTridiagonalMatrix, PartitionPlan};

/// One interior segment `A_uu^(k)` together with its two coupling blocks and
/// the intermediate factor `F^(k) = (A_uu^(k))^{-1} A_lu^(k)`.
#[derive(Debug, Clone)]
pub struct Segment {
    pub(crate) range: Range<usize>,
    pub(crate) interior: BlockTridiagonalMatrix,
    pub(crate) coupling_left: Vec<f64>,
    pub(crate) coupling_right: Vec<f64>,
    pub(crate) factor_f: BlockRhs,
}

impl Segment {
    /// Block indices of the segment in the ordering of its level.
    pub fn range(&self) -> Range<usize> {
        self.range.clone()
    }

    /// Segment length `J_k` in blocks.
    pub fn len(&self) -> usize {
        self.range.len()
    }

    pub fn is_empty(&self) -> bool {
        self.range.is_empty()
    }

    /// Interior system; holds its block-Cholesky factors once factorized.
    pub fn interior(&self) -> &BlockTridiagonalMatrix {
        &self.interior
    }

    /// `A_{start, start-1}`: couples the left separator into the first
    /// interior block row.
    pub fn coupling_left(&self) -> MatRef<'_> {
        let n = self.interior.block_dim();
        MatRef::new(&self.coupling_left, n, n)
    }

    /// `A_{end+1, end}`: couples the last interior block into the right
    /// separator's block row.
    pub fn coupling_right(&self) -> MatRef<'_> {
        let n = self.interior.block_dim();
        MatRef::new(&self.coupling_right, n, n)
    }

    /// The `J_k` panels of `F^(k)`, each `n x 2n`; columns `0..n` belong to the
    /// left separator and `n..2n` to the right one.
    pub fn factor_f(&self) -> &BlockRhs {
        &self.factor_f
    }
}

/// The `K` independent interior segments of one level.
#[derive(Debug, Clone)]
pub struct SegmentBatch {
    pub(crate) block_dim: usize,
    pub(crate) segments: Vec<Segment>,
}

impl SegmentBatch {
    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

/// One recursion level of a [`FactorHierarchy`].
#[derive(Debug, Clone)]
pub struct Level {
    pub(crate) plan: PartitionPlan,
    pub(crate) batch: SegmentBatch,
    pub(crate) schur: Option<BlockTridiagonalMatrix>,
}

impl Level {
    pub fn plan(&self) -> &PartitionPlan {
        &self.plan
    }

    pub fn batch(&self) -> &SegmentBatch {
        &self.batch
    }

    /// Block count of the matrix this level partitions.
    pub fn num_blocks(&self) -> usize {
        self.plan.num_blocks()
    }

    /// The unfactored Schur complement this level produced, when the
    /// hierarchy was built with `keep_schur`.
    pub fn schur_complement(&self) -> Option<&BlockTridiagonalMatrix> {
        self.schur.as_ref()
    }
}

/// Everything recursive factorization produces: one [`Level`] per reduction
/// step, plus the serially factored base system.
#[derive(Debug, Clone)]
pub struct FactorHierarchy {
    pub(crate) num_blocks: usize,
    pub(crate) block_dim: usize,
    pub(crate) levels: Vec<Level>,
    pub(crate) base: BlockTridiagonalMatrix,
    pub(crate) policy: BatchPolicy,
}

impl FactorHierarchy {
    pub fn num_blocks(&self) -> usize {
        self.num_blocks
    }

    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    /// Block-Cholesky factors of the coarsest system.
    pub fn base(&self) -> &BlockTridiagonalMatrix {
        &self.base
    }

    /// Block counts of the matrices at each level followed by the base size.
    pub fn level_sizes(&self) -> Vec<usize> {
        self.levels
            .iter()
            .map(Level::num_blocks)
            .chain(std::iter::once(self.base.num_blocks()))
            .collect()
    }
}
