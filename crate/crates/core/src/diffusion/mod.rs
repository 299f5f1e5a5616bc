//! One-dimensional diffusions `dX = b(X)dt + σ(X)dW` on `(ℓ, ∞)`: model
//! definition, scale and speed densities, hitting probabilities and the
//! boundary checks that decide whether the process drifts to `ℓ`.

mod checks;
mod config;
mod scale;
mod spec;

pub use checks::{
    apply_generator, check_assumptions, driftless_zero_hit_test, hitting_probability, AssumptionReport, Verdict,
    ZeroHitVerdict,
};
pub use config::ModelConfig;
pub use scale::{build_scale_speed, GridPoint, ScaleSpeed, ScaleSpeedOptions};
pub use spec::{DiffusionSpec, Preset};

use thiserror::Error;

use crate::expr::{EvalError, ParseError};
use crate::numerics::NumericsError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiffusionError {
    #[error("invalid model: {0}")]
    InvalidSpec(String),
    #[error("assumption violated: {0}")]
    AssumptionViolated(String),
    #[error("x = {x} is outside the state space ({ell}, ∞)")]
    OutOfDomain { x: f64, ell: f64 },
    #[error("{what} is not finite at x = {x}")]
    NonFinite { what: &'static str, x: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}
