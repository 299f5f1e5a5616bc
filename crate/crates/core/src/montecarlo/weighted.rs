use serde::Serialize;

use super::config::SimConfig;
use super::empirical::MeanEstimate;
use super::paths::{simulate_paths, PathFlag};
use super::MonteCarloError;
use crate::diffusion::ScaleSpeed;

/// Largest log-weight treated as finite.
const LOG_WEIGHT_LIMIT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightedEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub n: u64,
    /// Paths frozen at the lower guard; their weight is `s(guard)/s(x0)`.
    pub hit_lower_guard: u64,
}

/// `E[g(Z_t)]` for the conditioned process, estimated from base paths
/// weighted by `s(X_t)/s(x0)`.
///
/// The caller is responsible for the transience assumptions behind `ss`.
/// A path whose weight is not finite (typically an exploded one) makes the
/// whole estimate fail with the share of such paths.
pub fn weighted_expectation<G>(ss: &ScaleSpeed, g: G, cfg: &SimConfig) -> Result<WeightedEstimate, MonteCarloError>
where
    G: Fn(f64) -> f64,
{
    let spec = ss.spec();
    cfg.validate(spec.ell)?;
    let log_s0 = ss.log_s(cfg.x0)?;
    if cfg.t_end == 0.0 {
        return Ok(WeightedEstimate { estimate: g(cfg.x0), std_error: 0.0, n: cfg.n_paths, hit_lower_guard: 0 });
    }
    let ensemble = simulate_paths(spec, cfg)?;
    let mut clipped = 0;
    let mut terms = Vec::with_capacity(ensemble.paths.len());
    for p in &ensemble.paths {
        let log_w = match p.flag {
            PathFlag::Aborted => f64::NAN,
            _ => ss.log_s(p.value).map(|l| l - log_s0).unwrap_or(f64::NAN),
        };
        if !(log_w <= LOG_WEIGHT_LIMIT) {
            clipped += 1;
            continue;
        }
        terms.push(g(p.value) * log_w.exp());
    }
    if clipped > 0 {
        return Err(MonteCarloError::NonFiniteWeights { clipped, total: cfg.n_paths });
    }
    let m = MeanEstimate::of(terms);
    Ok(WeightedEstimate {
        estimate: m.mean,
        std_error: m.std_error,
        n: m.n,
        hit_lower_guard: ensemble.count(PathFlag::HitLowerGuard),
    })
}
