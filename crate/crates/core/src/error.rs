//! Error types shared across the crate.

use std::fmt;

use thiserror::Error;

/// Failure of a single dense kernel call.
///
/// Pivot and diagonal indices are 1-based, following the LAPACK `info`
/// convention.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum KernelError {
    #[error("leading minor of order {pivot} is not positive definite")]
    NotPositiveDefinite { pivot: usize },
    #[error("triangular factor has a zero diagonal entry at {index}")]
    SingularDiagonal { index: usize },
    #[error("operand shapes do not conform: {0}")]
    DimensionMismatch(&'static str),
}

/// A kernel failure inside a batched call, tagged with the failing member.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("batch member {member}: {source}")]
pub struct BatchError {
    pub member: usize,
    #[source]
    pub source: KernelError,
}

/// Where a Cholesky pivot failed.
///
/// `level` is the recursion level (0 for the input matrix; the base case of a
/// hierarchy with `L` levels reports `L`), `member` the segment within the
/// batch and `block` the block row within that member. All three are 0-based;
/// `pivot` is 1-based within the failing block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PivotLocation {
    pub level: usize,
    pub member: usize,
    pub block: usize,
    pub pivot: usize,
}

impl fmt::Display for PivotLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "level {}, member {}, block {}, pivot {}",
            self.level, self.member, self.block, self.pivot
        )
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("diagonal block {block} is not symmetric (max |D - D^T| = {asymmetry:e}, limit {limit:e})")]
    AsymmetricBlock { block: usize, asymmetry: f64, limit: f64 },

    #[error("{matrix} is not positive definite ({location})")]
    NotPositiveDefinite {
        matrix: &'static str,
        location: PivotLocation,
    },

    #[error("singular triangular factor in {context} (diagonal entry {index})")]
    SingularDiagonal { context: &'static str, index: usize },

    #[error("{context}: {source}")]
    Kernel {
        context: &'static str,
        #[source]
        source: KernelError,
    },

    #[error("zero pivot at row {index}")]
    ZeroPivot { index: usize },

    #[error("recursion exceeded {max_levels} levels")]
    LevelOverflow { max_levels: usize },

    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error(
        "bad magic {:?}, expected {:?}",
        String::from_utf8_lossy(found),
        String::from_utf8_lossy(expected)
    )]
    BadMagic { found: [u8; 4], expected: [u8; 4] },

    #[error("unsupported format version {0}")]
    VersionUnsupported(u32),

    #[error("truncated payload: expected {expected} bytes, found {actual}")]
    TruncatedPayload { expected: u64, actual: u64 },

    #[error("trailing data: expected {expected} bytes, found {actual}")]
    TrailingData { expected: u64, actual: u64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Lifts a batched kernel failure into a crate error with full coordinates.
    pub(crate) fn from_batch(err: BatchError, matrix: &'static str, level: usize, block: usize) -> Self {
        Self::from_kernel(err.source, matrix, level, err.member, block)
    }

    pub(crate) fn from_kernel(
        err: KernelError,
        matrix: &'static str,
        level: usize,
        member: usize,
        block: usize,
    ) -> Self {
        match err {
            KernelError::NotPositiveDefinite { pivot } => Error::NotPositiveDefinite {
                matrix,
                location: PivotLocation {
                    level,
                    member,
                    block,
                    pivot,
                },
            },
            KernelError::SingularDiagonal { index } => Error::SingularDiagonal { context: matrix, index },
            KernelError::DimensionMismatch(_) => Error::Kernel {
                context: matrix,
                source: err,
            },
        }
    }

    /// Coordinates of a failed pivot, if this is a positive-definiteness failure.
    pub fn pivot_location(&self) -> Option<PivotLocation> {
        match self {
            Error::NotPositiveDefinite { location, .. } => Some(*location),
            _ => None,
        }
    }
}
