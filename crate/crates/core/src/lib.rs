//! Exhaustive and single-number verification of Goldbach's conjecture.
//!
//! Range verifiers, from simplest to most scalable: [`baseline`],
//! [`global`] and [`segmented`]. [`single`] and [`big`] find a partition of
//! one even integer, 64-bit or arbitrary precision.

pub mod baseline;
pub mod big;
pub mod cli;
pub mod envelope;
pub mod error;
pub mod global;
pub mod mr64;
pub mod primes;
pub mod report;
pub mod segmented;
pub mod single;

pub use error::{Error, Result};
