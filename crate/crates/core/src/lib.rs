//! Desk-scale computations around Fourier coefficients of rational cusp
//! forms modulo m: exact coefficient engines, GL2 trace/determinant
//! censuses, residue-distribution constants, exponential-sum estimates,
//! and constructive Waring-type certificates over Z/mZ.

pub mod arith;
pub mod census;
pub mod dist;
pub mod coeff;
pub mod series;
pub mod error;
pub mod expsum;

pub use error::{Error, Result};
