//! Recursive Schur-complement (substructuring) factorization and solve.
//!
//! Each level picks separator block rows, eliminates the independent interior
//! segments between them with batched block-Cholesky, and recurses on the
//! Schur complement over the separators, which is again SPD and
//! block-tridiagonal. Below the crossover size the remaining system is
//! factorized serially.

mod complement;
mod partition;
mod recursive;

pub use complement::{compute_schur, compute_separator_rhs, update_boundary};
pub use partition::{assemble_solution, permute_split, plan_partition, split_rhs, SplitSystem};
pub use recursive::{recursive_factorize, recursive_solve};

use crate::error::{Error, Result};
use crate::kernels::BatchPolicy;

/// When recursion stops and the remaining system is factorized serially.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Crossover {
    /// Stop once the system has at most this many block rows (`N*`).
    Fixed(usize),
    /// Stop once a further level would produce fewer than two segments.
    Auto,
}

impl Default for Crossover {
    fn default() -> Self {
        Crossover::Fixed(RecursionConfig::DEFAULT_N_STAR)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecursionConfig {
    pub crossover: Crossover,
    /// Target interior segment length `rho`.
    pub reduction_factor: usize,
    /// Hard cap on recursion depth.
    pub max_levels: usize,
    /// Scheduling of batch members within a level.
    pub policy: BatchPolicy,
    /// Keep an unfactored copy of every level's Schur complement.
    pub keep_schur: bool,
}

impl Default for RecursionConfig {
    fn default() -> Self {
        RecursionConfig {
            crossover: Crossover::default(),
            reduction_factor: Self::DEFAULT_REDUCTION_FACTOR,
            max_levels: Self::DEFAULT_MAX_LEVELS,
            policy: BatchPolicy::Parallel,
            keep_schur: false,
        }
    }
}

impl RecursionConfig {
    pub const DEFAULT_N_STAR: usize = 64;
    pub const DEFAULT_REDUCTION_FACTOR: usize = 8;
    pub const DEFAULT_MAX_LEVELS: usize = 32;

    pub fn new(n_star: usize, reduction_factor: usize) -> Self {
        RecursionConfig {
            crossover: Crossover::Fixed(n_star),
            reduction_factor,
            ..Self::default()
        }
    }

    pub fn with_policy(mut self, policy: BatchPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_max_levels(mut self, max_levels: usize) -> Self {
        self.max_levels = max_levels;
        self
    }

    pub fn keep_schur(mut self, keep: bool) -> Self {
        self.keep_schur = keep;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Crossover::Fixed(0) = self.crossover {
            return Err(Error::InvalidConfig("crossover N* must be at least 1".into()));
        }
        if self.reduction_factor == 0 {
            return Err(Error::InvalidConfig("reduction factor must be at least 1".into()));
        }
        Ok(())
    }

    /// Whether a system of `num_blocks` block rows gets another level.
    ///
    /// Fewer than three block rows cannot be split into two separators and a
    /// non-empty interior, so such systems always go to the serial base case.
    pub fn should_recurse(&self, num_blocks: usize) -> bool {
        if num_blocks < 3 {
            return false;
        }
        match self.crossover {
            Crossover::Fixed(n_star) => num_blocks > n_star,
            Crossover::Auto => plan_partition(num_blocks, self).num_segments() >= 2,
        }
    }
}
