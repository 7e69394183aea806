//! Discretized transfer operators of the spin chain.

pub mod chain;
pub mod eigen;
pub mod grid;
pub mod kernel;

pub use chain::{boundary_vector, Side, TransferSystem, Upsilon};
pub use eigen::{leading_triple, EigenTriple};
pub use grid::{build_grid, GridParams, TransferGrid};
pub use kernel::{KernelTag, TransferOperator};
