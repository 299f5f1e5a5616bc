use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{KillCondSetup, SimConfig};
use super::empirical::EmpiricalDistribution;
use super::paths::{Dynamics, PathFlag, Stepper};
use super::rng::{stream, Domain, PathRng};
use super::MonteCarloError;
use crate::diffusion::{check_assumptions, DiffusionError, DiffusionSpec};

/// Proposals per parallel work item.
const CHUNK: u64 = 4096;
/// Tolerance of the transience check run before sampling.
const ASSUMPTION_TOL: f64 = 1e-8;

/// Accepted values of `X_{t_obs}` and the bookkeeping of the sampler.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KillCondResult {
    pub samples: EmpiricalDistribution,
    pub accepted: u64,
    pub total: u64,
    /// `accepted / total`, an estimate of `P{ζ > t_obs, X_{ζ−} > a}`.
    pub acc_prob: f64,
    /// Proposals with `ζ ≤ t_obs`.
    pub killed_early: u64,
    /// Proposals stopped by a non-finite coefficient.
    pub aborted: u64,
}

impl KillCondResult {
    /// The `accepted=<n> total=<n> acc_prob=<p>` summary line.
    pub fn summary(&self) -> String {
        format!("accepted={} total={} acc_prob={:.16e}", self.accepted, self.total, self.acc_prob)
    }
}

enum Proposal {
    Accepted(f64),
    Rejected,
    KilledEarly,
    Aborted,
}

#[derive(Default)]
struct Batch {
    values: Vec<f64>,
    total: u64,
    killed_early: u64,
    aborted: u64,
}

fn propose<D: Dynamics + ?Sized>(stepper: &Stepper<D>, x0: f64, setup: &KillCondSetup, rng: &mut PathRng) -> Proposal {
    // ζ comes first so early kills cost one draw.
    let zeta = rng.sample::<f64, _>(Exp1) / setup.lambda;
    if zeta <= setup.t_obs {
        return Proposal::KilledEarly;
    }
    let at_obs = stepper.run(x0, 0.0, setup.t_obs, rng, None);
    let at_zeta = match at_obs.flag {
        PathFlag::Alive => stepper.run(at_obs.value, setup.t_obs, zeta, rng, None),
        _ => at_obs,
    };
    match at_zeta.flag {
        PathFlag::Aborted => Proposal::Aborted,
        _ if at_zeta.value > setup.a => Proposal::Accepted(at_obs.value),
        _ => Proposal::Rejected,
    }
}

/// Proposals `start..start + count`, merged in index order.
fn run_batch<D: Dynamics + ?Sized>(
    dynamics: &D,
    setup: &KillCondSetup,
    cfg: &SimConfig,
    start: u64,
    count: u64,
) -> Batch {
    let stepper = Stepper::new(dynamics, cfg);
    let chunks = count.div_ceil(CHUNK);
    let parts: Vec<Batch> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = start + c * CHUNK;
            let hi = (lo + CHUNK).min(start + count);
            let mut b = Batch { total: hi - lo, ..Batch::default() };
            for id in lo..hi {
                let mut rng = stream(cfg.seed, Domain::Killing, id);
                match propose(&stepper, cfg.x0, setup, &mut rng) {
                    Proposal::Accepted(x) => b.values.push(x),
                    Proposal::Rejected => {}
                    Proposal::KilledEarly => b.killed_early += 1,
                    Proposal::Aborted => b.aborted += 1,
                }
            }
            b
        })
        .collect();
    parts.into_iter().fold(Batch::default(), |mut acc, b| {
        acc.values.extend(b.values);
        acc.total += b.total;
        acc.killed_early += b.killed_early;
        acc.aborted += b.aborted;
        acc
    })
}

fn prepare(spec: &DiffusionSpec, setup: &KillCondSetup, cfg: &SimConfig) -> Result<(), MonteCarloError> {
    cfg.validate(spec.ell)?;
    setup.validate(spec.ell)?;
    if setup.t_obs > cfg.t_end {
        return Err(MonteCarloError::ConfigInvalid(format!("t_obs = {} exceeds t_end = {}", setup.t_obs, cfg.t_end)));
    }
    let report = check_assumptions(spec, ASSUMPTION_TOL);
    if !report.passed() {
        return Err(
            DiffusionError::AssumptionViolated(format!("{}; {}", report.left_verdict, report.right_verdict)).into()
        );
    }
    Ok(())
}

fn finish(b: Batch) -> Result<KillCondResult, MonteCarloError> {
    if b.values.is_empty() {
        return Err(MonteCarloError::NoAcceptedPaths { total: b.total });
    }
    let accepted = b.values.len() as u64;
    Ok(KillCondResult {
        samples: EmpiricalDistribution::new(b.values)?,
        accepted,
        total: b.total,
        acc_prob: accepted as f64 / b.total as f64,
        killed_early: b.killed_early,
        aborted: b.aborted,
    })
}

/// Rejection sampler for the killed-and-conditioned law at `t_obs`.
///
/// Each of the `cfg.n_paths` proposals draws `ζ ~ Exp(λ)`, runs the base
/// process on `[0, ζ]` with a final partial step landing exactly on `ζ`,
/// and is accepted when `ζ > t_obs` and `X_ζ > a`. The value kept is
/// `X_{t_obs}`.
pub fn simulate_killed_conditioned(
    spec: &DiffusionSpec,
    setup: &KillCondSetup,
    cfg: &SimConfig,
) -> Result<KillCondResult, MonteCarloError> {
    prepare(spec, setup, cfg)?;
    finish(run_batch(spec, setup, cfg, 0, cfg.n_paths))
}

/// Keeps proposing in batches of `cfg.n_paths` until `target_accepted`
/// paths are accepted or `max_proposals` have been drawn.
///
/// The proposals used are always a prefix of the same index sequence, so
/// the result is reproducible.
pub fn simulate_killed_conditioned_until(
    spec: &DiffusionSpec,
    setup: &KillCondSetup,
    cfg: &SimConfig,
    target_accepted: u64,
    max_proposals: u64,
) -> Result<KillCondResult, MonteCarloError> {
    prepare(spec, setup, cfg)?;
    let mut acc = Batch::default();
    while (acc.values.len() as u64) < target_accepted && acc.total < max_proposals {
        let count = cfg.n_paths.min(max_proposals - acc.total);
        let b = run_batch(spec, setup, cfg, acc.total, count);
        acc.values.extend(b.values);
        acc.total += b.total;
        acc.killed_early += b.killed_early;
        acc.aborted += b.aborted;
    }
    finish(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bm_cfg(n: u64) -> SimConfig {
        SimConfig::new(f64::NEG_INFINITY, 0.0, 1.0, 0.01, n, 11)
    }

    #[test]
    fn zero_observation_time() {
        let spec = DiffusionSpec::bm_drift(0.5);
        let r = simulate_killed_conditioned(&spec, &KillCondSetup { lambda: 1.0, a: 0.5, t_obs: 0.0 }, &bm_cfg(2000))
            .unwrap();
        assert!(r.samples.samples().iter().all(|&x| x == 0.0));
        assert_eq!(r.killed_early, 0);
        assert_eq!(r.total, 2000);
    }

    #[test]
    fn acceptance_nested_in_a() {
        let spec = DiffusionSpec::bm_drift(0.5);
        let cfg = bm_cfg(200_000);
        let p: Vec<f64> = [0.5, 1.0, 2.0]
            .iter()
            .map(|&a| {
                simulate_killed_conditioned(&spec, &KillCondSetup { lambda: 0.4, a, t_obs: 1.0 }, &cfg)
                    .unwrap()
                    .acc_prob
            })
            .collect();
        assert!(p[0] >= p[1] && p[1] >= p[2], "{p:?}");
        // Exact acceptance at a = 2, λ = 0.4 from the resolvent of BM with drift.
        assert!((p[2] - 1.165e-2).abs() < 4.0 * (1.165e-2 / 200_000.0f64).sqrt(), "{}", p[2]);
    }

    #[test]
    fn nothing_survives() {
        let spec = DiffusionSpec::bm_drift(0.5);
        let r = simulate_killed_conditioned(&spec, &KillCondSetup { lambda: 800.0, a: 0.0, t_obs: 1.0 }, &bm_cfg(1000));
        assert_eq!(r, Err(MonteCarloError::NoAcceptedPaths { total: 1000 }));
    }

    #[test]
    fn rejects_recurrent_models_and_bad_setups() {
        let bm = DiffusionSpec::bm_drift(0.0);
        let setup = KillCondSetup { lambda: 1.0, a: 1.0, t_obs: 1.0 };
        assert!(matches!(
            simulate_killed_conditioned(&bm, &setup, &bm_cfg(10)),
            Err(MonteCarloError::Diffusion(DiffusionError::AssumptionViolated(_)))
        ));
        let spec = DiffusionSpec::bm_drift(0.5);
        let late = KillCondSetup { t_obs: 2.0, ..setup };
        assert!(matches!(
            simulate_killed_conditioned(&spec, &late, &bm_cfg(10)),
            Err(MonteCarloError::ConfigInvalid(_))
        ));
    }

    #[test]
    fn until_uses_a_prefix() {
        let spec = DiffusionSpec::bm_drift(0.5);
        let setup = KillCondSetup { lambda: 0.4, a: 1.0, t_obs: 1.0 };
        let cfg = bm_cfg(5000);
        let r = simulate_killed_conditioned_until(&spec, &setup, &cfg, 300, 1_000_000).unwrap();
        assert!(r.accepted >= 300 && r.total.is_multiple_of(5000));
        let direct = simulate_killed_conditioned(&spec, &setup, &SimConfig { n_paths: r.total, ..cfg }).unwrap();
        assert_eq!(direct, r);
    }

    #[test]
    fn stepwise_base_process() {
        // gbm needs Euler steps on both legs; the law at t_obs must sit above
        // the unconditioned one.
        let spec = DiffusionSpec::gbm(0.1, 1.0).unwrap();
        let cfg = SimConfig::new(0.0, 1.0, 1.0, 0.01, 20_000, 3);
        let r = simulate_killed_conditioned(&spec, &KillCondSetup { lambda: 0.5, a: 2.0, t_obs: 1.0 }, &cfg).unwrap();
        assert!(r.accepted > 100);
        assert!(r.samples.mean() > 1.3, "{}", r.samples.mean());
    }
}
