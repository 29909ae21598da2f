//! Monte Carlo and exact tools for one-arm probabilities of critical
//! long-range branching random walk and long-range percolation on `Z^d`.

pub mod analysis;
pub mod brw;
pub mod error;
pub mod exact;
pub mod gw;
pub mod job;
pub mod kernel;
pub mod lattice;
pub mod lrp;
pub mod numeric;
pub mod parallel;
pub mod rng;

pub use error::{Error, Result};
pub use gw::{OffspringDist, Tree};
pub use kernel::{Alpha, Kernel, KernelSpec, Shape};
pub use lattice::{Point, Region, Shell};
