use thiserror::Error;

use crate::HalfInt;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid spin label: {0}")]
    InvalidSpin(String),

    #[error("J - j must be a non-negative integer (J = {total}, j = {block})")]
    NonIntegerSpinDifference { total: HalfInt, block: HalfInt },

    #[error("no POVM kernel supplied for block j = {0}")]
    MissingKernel(HalfInt),

    #[error("invalid POVM kernel for j = {j}: {reason}")]
    InvalidKernel { j: HalfInt, reason: String },

    #[error("state amplitudes are not normalized (norm² = {0})")]
    NotNormalized(f64),

    #[error("quadrature defect for j = {j}, delta = {delta}: {reason}")]
    QuadratureDefect {
        j: HalfInt,
        delta: f64,
        reason: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
