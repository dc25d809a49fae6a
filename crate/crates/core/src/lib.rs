//! Measures, correlation kernels and jump dynamics on strict partitions.
//!
//! The hypergeometric-type model is parameterized by α > 0 and ξ ∈ (0, 1)
//! ([`ModelParams`]); its Plancherel degeneration by θ > 0
//! ([`PlancherelParams`]).

pub mod dynamics;
pub mod error;
pub mod io;
pub mod kernels;
pub mod kerov;
pub mod measures;
pub mod oracle;
pub mod partitions;
pub mod pfaffian;
pub mod specfun;
pub mod verify;

pub use error::{Error, Result};
pub use kernels::{KernelKind, KernelTable, SeriesValue};
pub use partitions::{DiagramBox, StrictPartition};
pub use pfaffian::{Labeling, SkewMatrix};
pub use specfun::{HalfInt, ModelParams, PlancherelParams, ZPair};
