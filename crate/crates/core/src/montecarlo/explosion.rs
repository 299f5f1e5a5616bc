use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::config::SimConfig;
use super::paths::{simulate_paths, Dynamics, PathFlag};
use super::rng::{stream, Domain};
use super::MonteCarloError;

/// `(t, fraction exploded by t)` pairs.
pub type Profile = Vec<(f64, f64)>;

/// Fraction of paths that reached `explosion_cap` by each time in `t_grid`.
///
/// All times share one ensemble run to `cfg.t_end`, so the profile is
/// nondecreasing by construction.
pub fn explosion_profile<D: Dynamics + ?Sized>(
    dynamics: &D,
    cfg: &SimConfig,
    t_grid: &[f64],
) -> Result<Vec<f64>, MonteCarloError> {
    if let Some(&t) = t_grid.iter().find(|&&t| !(0.0..=cfg.t_end).contains(&t)) {
        return Err(MonteCarloError::ConfigInvalid(format!("time {t} outside [0, {}]", cfg.t_end)));
    }
    let ensemble = simulate_paths(dynamics, cfg)?;
    let mut times: Vec<f64> =
        ensemble.paths.iter().filter(|p| p.flag == PathFlag::Exploded).map(|p| p.t_stop).collect();
    times.sort_by(f64::total_cmp);
    let n = ensemble.paths.len() as f64;
    Ok(t_grid.iter().map(|&t| times.partition_point(|&s| s <= t) as f64 / n).collect())
}

/// First horizon `t_start·2^k`, `k ≤ max_doublings`, by which more than
/// `threshold` of the paths have exploded, with the whole profile.
///
/// `cfg.t_end` is replaced by the last horizon.
pub fn explosion_horizon<D: Dynamics + ?Sized>(
    dynamics: &D,
    cfg: &SimConfig,
    t_start: f64,
    max_doublings: u32,
    threshold: f64,
) -> Result<(Option<f64>, Profile), MonteCarloError> {
    if !(t_start > 0.0) {
        return Err(MonteCarloError::ConfigInvalid(format!("t_start must be positive, got {t_start}")));
    }
    let horizons: Vec<f64> = (0..=max_doublings).map(|k| t_start * 2f64.powi(k as i32)).collect();
    let last = *horizons.last().expect("at least one horizon");
    let cfg = SimConfig { t_end: last, dt: cfg.dt.min(last), ..*cfg };
    let fractions = explosion_profile(dynamics, &cfg, &horizons)?;
    let found = horizons.iter().zip(&fractions).find(|(_, &f)| f > threshold).map(|(&t, _)| t);
    Ok((found, horizons.into_iter().zip(fractions).collect()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FirstPassage {
    pub hits: u64,
    pub n: u64,
    pub probability: f64,
    /// Binomial standard error `√(p(1 − p)/n)`.
    pub std_error: f64,
}

/// Monte Carlo estimate of `P^{x0}{T_level ≤ t_end}`.
///
/// A path stops once it falls to `lower_cutoff`. Crossings between grid
/// points are caught with the Brownian bridge probability
/// `exp(−2(level − x)(level − y)/(σ²(x)h))`.
pub fn first_passage_probability<D: Dynamics + ?Sized>(
    dynamics: &D,
    cfg: &SimConfig,
    level: f64,
    lower_cutoff: f64,
) -> Result<FirstPassage, MonteCarloError> {
    cfg.validate(dynamics.ell())?;
    if !(lower_cutoff < cfg.x0 && cfg.x0 < level) {
        return Err(MonteCarloError::ConfigInvalid(format!(
            "need lower_cutoff < x0 < level, got {lower_cutoff}, {}, {level}",
            cfg.x0
        )));
    }
    let n_steps = ((cfg.t_end / cfg.dt) - 1e-9).ceil().max(0.0) as u64;
    let hit: Vec<bool> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|id| {
            let mut rng = stream(cfg.seed, Domain::Passage, id);
            let mut x = cfg.x0;
            for k in 0..n_steps {
                let h = (cfg.t_end - k as f64 * cfg.dt).min(cfg.dt);
                let b = dynamics.drift(x);
                let s = dynamics.sigma(x);
                let z: f64 = rng.sample(StandardNormal);
                let y = x + b * h + s * h.sqrt() * z;
                if !y.is_finite() {
                    return false;
                }
                if y >= level {
                    return true;
                }
                let p = (-2.0 * (level - x) * (level - y) / (s * s * h)).exp();
                if rng.random::<f64>() < p {
                    return true;
                }
                if y <= lower_cutoff {
                    return false;
                }
                x = y;
            }
            false
        })
        .collect();
    let hits = hit.iter().filter(|&&h| h).count() as u64;
    let n = cfg.n_paths;
    let p = hits as f64 / n as f64;
    Ok(FirstPassage { hits, n, probability: p, std_error: (p * (1.0 - p) / n as f64).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::DiffusionSpec;
    use crate::montecarlo::Coefficients;

    #[test]
    fn still_process_never_explodes() {
        let d = Coefficients { drift: |_| 0.0, sigma: |_| 0.0 };
        let cfg = SimConfig::new(f64::NEG_INFINITY, 1.0, 2.0, 0.1, 50, 1);
        assert_eq!(explosion_profile(&d, &cfg, &[0.5, 1.0, 2.0]).unwrap(), vec![0.0; 3]);
        assert!(explosion_profile(&d, &cfg, &[3.0]).is_err());
    }

    #[test]
    fn deterministic_blowup_horizon() {
        // dx/dt = x² from 1 explodes at t = 1.
        let d = Coefficients { drift: |x: f64| x * x, sigma: |_| 0.0 };
        let cfg = SimConfig { explosion_cap: 1e4, ..SimConfig::new(f64::NEG_INFINITY, 1.0, 1.0, 1e-3, 4, 1) };
        let (t, profile) = explosion_horizon(&d, &cfg, 0.5, 3, 0.5).unwrap();
        assert_eq!(t, Some(2.0));
        assert_eq!(profile.iter().map(|p| p.1).collect::<Vec<_>>(), vec![0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn brownian_hitting_probability() {
        let spec = DiffusionSpec::bm_drift(0.5);
        let cfg = SimConfig::new(f64::NEG_INFINITY, 0.0, 200.0, 0.01, 4000, 8);
        let r = first_passage_probability(&spec, &cfg, 1.0, -40.0).unwrap();
        let exact = (-1.0f64).exp();
        assert!((r.probability - exact).abs() < 3.0 * r.std_error, "{r:?}");
    }
}
