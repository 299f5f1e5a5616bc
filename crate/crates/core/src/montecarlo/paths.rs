use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{Record, SimConfig, MAX_HALVINGS};
use super::empirical::EmpiricalDistribution;
use super::rng::{stream, Domain, PathRng};
use super::MonteCarloError;
use crate::conditioning::ConditionedDiffusion;
use crate::diffusion::{DiffusionSpec, Preset};

/// Coefficients of `dX = b(X)dt + σ(X)dW` as seen by the path simulator.
pub trait Dynamics: Sync {
    fn drift(&self, x: f64) -> f64;
    fn sigma(&self, x: f64) -> f64;

    /// Left end of the state space.
    fn ell(&self) -> f64 {
        f64::NEG_INFINITY
    }

    /// `Some((b, σ))` when neither coefficient depends on `x`. Such paths
    /// are advanced in one exact Gaussian step per interval.
    fn constant_coefficients(&self) -> Option<(f64, f64)> {
        None
    }
}

impl Dynamics for DiffusionSpec {
    fn drift(&self, x: f64) -> f64 {
        DiffusionSpec::drift(self, x)
    }

    fn sigma(&self, x: f64) -> f64 {
        self.sigma_at(x)
    }

    fn ell(&self) -> f64 {
        self.ell
    }

    fn constant_coefficients(&self) -> Option<(f64, f64)> {
        match self.preset {
            Some(Preset::BmDrift { mu }) => Some((-mu, 1.0)),
            Some(_) => None,
            None if self.b.is_constant() && self.sigma.is_constant() => {
                Some((self.b.eval(0.0).ok()?, self.sigma.eval(0.0).ok()?))
            }
            None => None,
        }
    }
}

impl Dynamics for ConditionedDiffusion {
    fn drift(&self, x: f64) -> f64 {
        self.b_tilde(x).unwrap_or(f64::NAN)
    }

    fn sigma(&self, x: f64) -> f64 {
        ConditionedDiffusion::sigma(self, x)
    }

    fn ell(&self) -> f64 {
        self.base().ell
    }
}

/// Closure-backed dynamics on the whole real line.
pub struct Coefficients<B, S> {
    pub drift: B,
    pub sigma: S,
}

impl<B, S> Dynamics for Coefficients<B, S>
where
    B: Fn(f64) -> f64 + Sync,
    S: Fn(f64) -> f64 + Sync,
{
    fn drift(&self, x: f64) -> f64 {
        (self.drift)(x)
    }

    fn sigma(&self, x: f64) -> f64 {
        (self.sigma)(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PathFlag {
    Alive,
    HitLowerGuard,
    Exploded,
    /// A coefficient was not finite; the path stops at its last value.
    Aborted,
}

impl PathFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            PathFlag::Alive => "alive",
            PathFlag::HitLowerGuard => "hit_lower_guard",
            PathFlag::Exploded => "exploded",
            PathFlag::Aborted => "aborted",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathRecord {
    /// Path index, which is also its RNG stream id.
    pub id: u64,
    pub flag: PathFlag,
    /// Value at `t_end`, or the frozen value of a stopped path.
    pub value: f64,
    /// Time the flag was raised, `t_end` for alive paths.
    pub t_stop: f64,
    /// `(t, x)` on the step grid; empty unless full paths are recorded.
    pub trajectory: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathEnsemble {
    pub config: SimConfig,
    pub paths: Vec<PathRecord>,
}

impl PathEnsemble {
    pub fn values(&self) -> Vec<f64> {
        self.paths.iter().map(|p| p.value).collect()
    }

    /// Law of the terminal (or frozen) values.
    pub fn marginal(&self) -> Result<EmpiricalDistribution, MonteCarloError> {
        EmpiricalDistribution::new(self.values())
    }

    pub fn count(&self, flag: PathFlag) -> u64 {
        self.paths.iter().filter(|p| p.flag == flag).count() as u64
    }

    pub fn fraction(&self, flag: PathFlag) -> f64 {
        self.count(flag) as f64 / self.paths.len() as f64
    }
}

/// Where a run over a time interval ended.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Stop {
    pub flag: PathFlag,
    pub value: f64,
    pub t: f64,
}

pub(crate) struct Stepper<'a, D: ?Sized> {
    dynamics: &'a D,
    constant: Option<(f64, f64)>,
    dt: f64,
    guard: f64,
    cap: f64,
}

impl<'a, D: Dynamics + ?Sized> Stepper<'a, D> {
    pub fn new(dynamics: &'a D, cfg: &SimConfig) -> Self {
        Stepper {
            dynamics,
            constant: dynamics.constant_coefficients(),
            dt: cfg.dt,
            guard: cfg.lower_guard,
            cap: cfg.explosion_cap,
        }
    }

    /// One Euler step of length `h` driven by the increment `dw`. A landing
    /// at or below the guard is replayed on two half steps whose increments
    /// come from a Brownian bridge, so the driving path is unchanged.
    fn euler(&self, x: f64, h: f64, dw: f64, rng: &mut PathRng, depth: u32) -> Result<f64, (PathFlag, f64)> {
        let b = self.dynamics.drift(x);
        let s = self.dynamics.sigma(x);
        if !(b.is_finite() && s.is_finite()) {
            return Err((PathFlag::Aborted, x));
        }
        let y = x + b * h + s * dw;
        if y.is_nan() {
            return Err((PathFlag::Aborted, x));
        }
        if y >= self.cap {
            return Err((PathFlag::Exploded, self.cap));
        }
        if y > self.guard {
            return Ok(y);
        }
        if depth >= MAX_HALVINGS {
            return Err((PathFlag::HitLowerGuard, self.guard));
        }
        let z: f64 = rng.sample(StandardNormal);
        let dw1 = 0.5 * dw + 0.5 * h.sqrt() * z;
        let mid = self.euler(x, 0.5 * h, dw1, rng, depth + 1)?;
        self.euler(mid, 0.5 * h, dw - dw1, rng, depth + 1)
    }

    /// Exact transition for constant coefficients, with the guard and the
    /// cap checked by the Brownian bridge crossing probability.
    fn exact_constant(&self, b: f64, s: f64, x: f64, t0: f64, t1: f64, rng: &mut PathRng) -> Stop {
        let span = t1 - t0;
        let z: f64 = rng.sample(StandardNormal);
        let y = x + b * span + s * span.sqrt() * z;
        if y.is_nan() {
            return Stop { flag: PathFlag::Aborted, value: x, t: t0 };
        }
        let var = s * s * span;
        let crossed = |rng: &mut PathRng, d0: f64, d1: f64| {
            if d1 <= 0.0 {
                return true;
            }
            let r = 2.0 * d0 * d1 / var;
            // exp(−r) underflows past r ≈ 745; skip the draw when it cannot matter.
            r < 746.0 && rng.random::<f64>() < (-r).exp()
        };
        if crossed(rng, x - self.guard, y - self.guard) {
            return Stop { flag: PathFlag::HitLowerGuard, value: self.guard, t: t1 };
        }
        if crossed(rng, self.cap - x, self.cap - y) {
            return Stop { flag: PathFlag::Exploded, value: self.cap, t: t1 };
        }
        Stop { flag: PathFlag::Alive, value: y, t: t1 }
    }

    /// Advances `x` from `t0` to `t1`: steps of `dt` and a final partial
    /// step that lands exactly on `t1`.
    pub fn run(
        &self,
        x: f64,
        t0: f64,
        t1: f64,
        rng: &mut PathRng,
        mut trajectory: Option<&mut Vec<(f64, f64)>>,
    ) -> Stop {
        let span = t1 - t0;
        if !(span > 0.0) {
            return Stop { flag: PathFlag::Alive, value: x, t: t0.max(t1) };
        }
        if let (Some((b, s)), None) = (self.constant, trajectory.as_ref()) {
            return self.exact_constant(b, s, x, t0, t1, rng);
        }
        let n = ((span / self.dt) - 1e-9).ceil().max(1.0) as u64;
        let mut x = x;
        for k in 0..n {
            let tk = t0 + k as f64 * self.dt;
            let (h, t_next) = if k + 1 == n { (t1 - tk, t1) } else { (self.dt, t0 + (k + 1) as f64 * self.dt) };
            if !(h > 0.0) {
                continue;
            }
            let z: f64 = rng.sample(StandardNormal);
            match self.euler(x, h, h.sqrt() * z, rng, 0) {
                Ok(y) => x = y,
                Err((flag, value)) => {
                    if let Some(tr) = trajectory.as_deref_mut() {
                        tr.push((t_next, value));
                    }
                    return Stop { flag, value, t: t_next };
                }
            }
            if let Some(tr) = trajectory.as_deref_mut() {
                tr.push((t_next, x));
            }
        }
        Stop { flag: PathFlag::Alive, value: x, t: t1 }
    }
}

/// Euler–Maruyama paths `X_{k+1} = X_k + b(X_k)dt + σ(X_k)√dt·N(0,1)`.
///
/// Steps landing at or below `lower_guard` are refined down to
/// `dt/2^8` before the path is flagged and frozen at the guard; steps
/// reaching `explosion_cap` flag the path as exploded. Constant-coefficient
/// models are advanced exactly in a single Gaussian step when only the
/// marginal is recorded.
pub fn simulate_paths<D: Dynamics + ?Sized>(dynamics: &D, cfg: &SimConfig) -> Result<PathEnsemble, MonteCarloError> {
    cfg.validate(dynamics.ell())?;
    let stepper = Stepper::new(dynamics, cfg);
    let full = cfg.record == Record::FullPath;
    let paths = (0..cfg.n_paths)
        .into_par_iter()
        .map(|id| {
            let mut rng = stream(cfg.seed, Domain::Paths, id);
            let mut trajectory = Vec::new();
            if full {
                trajectory.push((0.0, cfg.x0));
            }
            let stop = stepper.run(cfg.x0, 0.0, cfg.t_end, &mut rng, full.then_some(&mut trajectory));
            PathRecord { id, flag: stop.flag, value: stop.value, t_stop: stop.t, trajectory }
        })
        .collect();
    Ok(PathEnsemble { config: *cfg, paths })
}
