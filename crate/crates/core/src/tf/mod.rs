//! Polynomial and rational transfer-function algebra over the reals.
//!
//! Everything here is an immutable value type. Coefficients are stored in
//! ascending powers of `s`.

mod poly;
mod rational;

pub use poly::{Polynomial, ROOT_RESIDUAL_TOL};
pub use rational::{log_space, ComplexFrequencyPoint, RationalTransferFunction, CANCEL_TOL, EVAL_TOL};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TfError {
    #[error("operation undefined for the zero polynomial")]
    ZeroPolynomial,
    #[error("root finder did not converge")]
    NoConvergence,
    #[error("transfer function denominator is zero")]
    ZeroDenominator,
    #[error("denominator vanishes at omega = {omega} rad/s")]
    PoleAtFrequency { omega: f64 },
    #[error("transfer function is improper (numerator degree {num_degree} > denominator degree {den_degree})")]
    ImproperTransferFunction { num_degree: usize, den_degree: usize },
}
