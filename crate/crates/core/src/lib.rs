pub mod bench;
pub mod block_cholesky;
pub mod cli;
pub mod error;
pub mod io;
pub mod kalman;
pub mod kernels;
pub mod oracle;
pub mod report;
pub mod schur;
pub mod synth;
pub mod types;

pub use block_cholesky::{factorize_btd_batch, serial_factorize, serial_solve, solve_btd_batch, BlockCholesky};
pub use error::{Error, PivotLocation, Result};
pub use kernels::BatchPolicy;
pub use schur::{recursive_factorize, recursive_solve, Crossover, RecursionConfig};
pub use types::{BlockRhs, BlockTridiagonalMatrix, DenseMatrix, FactorHierarchy, PartitionPlan};
