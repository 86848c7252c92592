//! Direction estimation of polarized spin ensembles with covariant
//! measurements: exact score evaluation, a three-dimensional von Neumann
//! pointer measurement, thermal inputs, and repeated weak-measurement
//! trajectories.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
mod halfint;
pub mod oracles;
pub mod pointer;
pub mod quadrature;
pub mod score;
pub mod spin;
pub mod thermal;
pub mod weak;

pub use error::{Error, Result};
pub use exec::Execution;
pub use halfint::HalfInt;
