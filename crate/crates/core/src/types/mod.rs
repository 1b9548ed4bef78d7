//! Block-structured matrices, right-hand sides and partition metadata.

mod btd;
mod dense;
mod plan;
mod rhs;
mod segment;

pub use btd::{BlockTridiagonalMatrix, SYMMETRY_TOLERANCE};
pub use dense::DenseMatrix;
pub use plan::PartitionPlan;
pub use rhs::BlockRhs;
pub use segment::{FactorHierarchy, Level, Segment, SegmentBatch};
