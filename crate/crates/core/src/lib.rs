//! Classical simulation of Shor's factoring algorithm.
//!
//! The quantum part of the algorithm is simulated on a two-part register
//! ([`qstate`]) and transformed by one of several interchangeable QFT
//! engines ([`qft`]); the heart of the crate is the block-parallel dense
//! kernel, with fast, tiled and gate-level engines as cross-checks.
//! [`numtheory`] supplies the classical pre- and post-processing,
//! [`shor`] drives complete factoring runs, and [`perfmodel`] / [`bench`]
//! hold the cost model and benchmark harness.

pub mod bench;
pub mod error;
pub mod numtheory;
pub mod perfmodel;
pub mod qft;
pub mod qstate;
pub mod shor;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use num_complex::Complex64;
