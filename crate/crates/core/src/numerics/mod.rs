//! Deterministic numerical kernels: adaptive quadrature with singular or
//! infinite endpoints, and finite-difference derivatives.

mod diff;
pub(crate) mod gauss;
mod improper;
mod quadrature;

pub use diff::finite_difference_derivs;
pub use improper::{improper_lower_integral, improper_upper_integral};
pub(crate) use improper::{improper_lower_rel, improper_upper_rel};
pub use quadrature::adaptive_quadrature;
pub(crate) use quadrature::integrate;

use thiserror::Error;

/// Outcome of a quadrature call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    /// Absolute error estimate, always non-negative.
    pub error_estimate: f64,
    /// Number of subintervals (or mapped chunks) used, at least one.
    pub subdivisions: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("quadrature did not converge: value {value:e}, error estimate {error_estimate:e}")]
    NonConvergence { value: f64, error_estimate: f64 },
    #[error("integrand returned a non-finite value at x = {x:e}")]
    NonFinite { x: f64 },
    #[error("integral classified divergent (partial value {partial:e}); this is a heuristic verdict")]
    Divergent { partial: f64 },
    #[error("invalid arguments: {0}")]
    InvalidInput(String),
}

/// Function evaluations allowed per quadrature call.
pub const EVAL_BUDGET: usize = 1_000_000;
