//! Simulation and numerical verification of multivariate moving averages
//! driven by a symmetric β-stable Lévy process.

// Guards like `!(x > 0.0)` deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod harness;
pub mod kernels;
pub mod quad;
pub mod simulate;
pub mod stable;
pub mod stats;

pub use error::{Error, Result};
pub use kernels::{KernelBank, KernelFamily, KernelSpec};
pub use simulate::{plan_grid, simulate_paths, PathMatrix, SimulationGrid};
pub use stable::{SeedStream, StableParams};
