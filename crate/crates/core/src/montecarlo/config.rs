use serde::{Deserialize, Serialize};

use super::MonteCarloError;

/// Default absorbing cap above which a path counts as exploded.
pub const DEFAULT_EXPLOSION_CAP: f64 = 1e6;
/// A step that lands at or below the lower guard is retried on Brownian
/// bridge sub-steps down to `dt / 2^MAX_HALVINGS`.
pub const MAX_HALVINGS: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Record {
    MarginalOnly,
    FullPath,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub x0: f64,
    pub t_end: f64,
    pub dt: f64,
    pub n_paths: u64,
    pub seed: u64,
    /// Numerical floor just above `ℓ`; paths reaching it are frozen.
    pub lower_guard: f64,
    pub explosion_cap: f64,
    pub record: Record,
}

impl SimConfig {
    /// A config with the default guard and cap for a state space `(ell, ∞)`:
    /// `ℓ + 1e-8·(x0 − ℓ)` for finite `ℓ`, `−1e8` otherwise.
    pub fn new(ell: f64, x0: f64, t_end: f64, dt: f64, n_paths: u64, seed: u64) -> Self {
        let lower_guard = if ell.is_finite() { ell + 1e-8 * (x0 - ell) } else { -1e8 };
        SimConfig {
            x0,
            t_end,
            dt,
            n_paths,
            seed,
            lower_guard,
            explosion_cap: DEFAULT_EXPLOSION_CAP,
            record: Record::MarginalOnly,
        }
    }

    /// Checks the config against the state space `(ell, ∞)`.
    ///
    /// A zero horizon is accepted and means no step is taken.
    pub fn validate(&self, ell: f64) -> Result<(), MonteCarloError> {
        let bad = |m: String| Err(MonteCarloError::ConfigInvalid(m));
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be finite and nonnegative, got {}", self.t_end));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) || (self.t_end > 0.0 && self.dt > self.t_end) {
            return bad(format!("need 0 < dt <= t_end, got dt={} t_end={}", self.dt, self.t_end));
        }
        if self.n_paths == 0 {
            return bad("n_paths must be at least 1".into());
        }
        if !self.x0.is_finite() || !(self.x0 < self.explosion_cap) {
            return bad(format!("need x0 < explosion_cap, got x0={} cap={}", self.x0, self.explosion_cap));
        }
        if !(self.lower_guard > ell && self.lower_guard < self.x0) {
            return bad(format!(
                "need ell < lower_guard < x0, got ell={ell} lower_guard={} x0={}",
                self.lower_guard, self.x0
            ));
        }
        Ok(())
    }
}

/// Killing at an independent `ζ ~ Exp(λ)` and conditioning on `X_{ζ−} > a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KillCondSetup {
    pub lambda: f64,
    pub a: f64,
    pub t_obs: f64,
}

impl KillCondSetup {
    pub fn validate(&self, ell: f64) -> Result<(), MonteCarloError> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(MonteCarloError::ConfigInvalid(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.a > ell && self.a.is_finite()) {
            return Err(MonteCarloError::ConfigInvalid(format!("a must lie in (ell, inf), got {}", self.a)));
        }
        if !(self.t_obs >= 0.0 && self.t_obs.is_finite()) {
            return Err(MonteCarloError::ConfigInvalid(format!("t_obs must be nonnegative, got {}", self.t_obs)));
        }
        Ok(())
    }
}
