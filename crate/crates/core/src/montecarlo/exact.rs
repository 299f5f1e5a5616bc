use rand::Rng;
use rand_distr::StandardNormal;

use super::empirical::EmpiricalDistribution;
use super::rng::{stream, Domain};
use super::MonteCarloError;
use crate::diffusion::Preset;

/// Exact samples of `X_t` (or of the conditioned `Z_t`) from `x0`.
///
/// Brownian motion with drift `−μ` conditions to drift `+μ`. Geometric
/// Brownian motion is `x0·exp(σW_t + (μ − σ²/2)t)`; conditioning replaces
/// `μ` by `σ² − μ`.
pub fn exact_sampler(
    preset: &Preset,
    conditioned: bool,
    x0: f64,
    t: f64,
    n: u64,
    seed: u64,
) -> Result<EmpiricalDistribution, MonteCarloError> {
    if !(t >= 0.0 && t.is_finite()) || !x0.is_finite() {
        return Err(MonteCarloError::ConfigInvalid(format!("need finite x0 and t >= 0, got {x0}, {t}")));
    }
    if n == 0 {
        return Err(MonteCarloError::ConfigInvalid("n must be at least 1".into()));
    }
    let sample: Box<dyn Fn(f64) -> f64> = match *preset {
        Preset::BmDrift { mu } => {
            let m = if conditioned { mu } else { -mu };
            Box::new(move |z| x0 + m * t + t.sqrt() * z)
        }
        Preset::Gbm { mu, sigma0 } => {
            if !(x0 > 0.0) {
                return Err(MonteCarloError::ConfigInvalid(format!("gbm needs x0 > 0, got {x0}")));
            }
            let m = if conditioned { sigma0 * sigma0 - mu } else { mu };
            Box::new(move |z| x0 * (sigma0 * t.sqrt() * z + (m - 0.5 * sigma0 * sigma0) * t).exp())
        }
        Preset::Logistic { .. } => return Err(MonteCarloError::UnsupportedPreset(preset.name().into())),
    };
    let mut rng = stream(seed, Domain::Exact, 0);
    let values = (0..n).map(|_| sample(rng.sample(StandardNormal))).collect();
    EmpiricalDistribution::new(values)
}
