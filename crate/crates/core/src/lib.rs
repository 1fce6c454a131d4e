//! Finite-scale construction and verification of regular (Toeplitz) summation
//! matrices whose rows are factorial-grid creatures.

pub mod bitstream;
pub mod condition;
pub mod creature;
pub mod error;
pub mod extension;
pub mod fusion;
pub mod matrix;
pub mod scalar;
pub mod sequence;
pub mod synthesis;
pub mod verify;

pub use error::{Error, Result};

/// Exact arbitrary-precision rational used for every creature entry.
pub type Rational = num_rational::BigRational;
