use std::ops::Range;

use crate::error::{Error, Result};

/// Split of `N` block indices into separators and interior segments for one
/// recursion level.
///
/// Indices are 0-based. Both endpoints are separators and no two separators
/// are adjacent, so every segment is non-empty and touches exactly two
/// separators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionPlan {
    num_blocks: usize,
    separators: Vec<usize>,
    segments: Vec<Range<usize>>,
}

impl PartitionPlan {
    /// Builds a plan from a separator list, checking every invariant.
    pub fn from_separators(num_blocks: usize, separators: Vec<usize>) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidDimensions(msg));
        if separators.len() < 2 {
            return bad(format!("need at least two separators, got {}", separators.len()));
        }
        if separators[0] != 0 || *separators.last().unwrap() + 1 != num_blocks {
            return bad(format!(
                "separators must include both endpoints 0 and {}",
                num_blocks.saturating_sub(1)
            ));
        }
        for w in separators.windows(2) {
            if w[1] <= w[0] + 1 {
                return bad(format!("separators {} and {} leave no interior", w[0], w[1]));
            }
        }
        let segments = separators.windows(2).map(|w| w[0] + 1..w[1]).collect();
        Ok(PartitionPlan {
            num_blocks,
            separators,
            segments,
        })
    }

    /// Block count `N` of the partitioned matrix.
    pub fn num_blocks(&self) -> usize {
        self.num_blocks
    }

    /// Separator indices, strictly increasing (0-based).
    pub fn separators(&self) -> &[usize] {
        &self.separators
    }

    /// Separator indices in 1-based numbering.
    pub fn separators_one_based(&self) -> Vec<usize> {
        self.separators.iter().map(|s| s + 1).collect()
    }

    /// Interior ranges (half-open, 0-based); segment `k` lies between
    /// separators `k` and `k + 1`.
    pub fn segments(&self) -> &[Range<usize>] {
        &self.segments
    }

    /// Separator count `P`.
    pub fn num_separators(&self) -> usize {
        self.separators.len()
    }

    /// Segment count `K = P - 1`.
    pub fn num_segments(&self) -> usize {
        self.segments.len()
    }

    pub fn max_segment_len(&self) -> usize {
        self.segments.iter().map(|r| r.len()).max().unwrap_or(0)
    }
}
