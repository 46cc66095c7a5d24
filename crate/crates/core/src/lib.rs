//! Exact-repair MDS storage codes on multi-hop networks.
//!
//! The crate builds storage codes for tandem (line) and grid networks, runs
//! their repair protocols symbolically, and certifies the achieved repair
//! traffic against the cut-set lower bound computed by an exact LP.

pub mod bound;
pub mod codebook;
pub mod error;
pub mod field;
pub mod linalg;
pub mod repair;
pub mod topology;
pub mod verify;

pub use error::{Error, Result};
