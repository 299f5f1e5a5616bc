//! Monte Carlo for base and conditioned diffusions: Euler–Maruyama paths,
//! the killing-and-conditioning rejection sampler, importance weighting by
//! the scale function and the empirical-law tools used to compare them.
//!
//! Every path draws from its own RNG stream keyed by `(seed, path index)`,
//! and results are merged in index order, so output does not depend on the
//! size of the rayon pool.

mod config;
mod empirical;
mod exact;
mod explosion;
mod killing;
mod paths;
mod rng;
mod weighted;

pub use config::{KillCondSetup, Record, SimConfig, DEFAULT_EXPLOSION_CAP, MAX_HALVINGS};
pub use empirical::{ks_statistic, EmpiricalDistribution, MeanEstimate};
pub use exact::exact_sampler;
pub use explosion::{explosion_horizon, explosion_profile, first_passage_probability, FirstPassage, Profile};
pub use killing::{simulate_killed_conditioned, simulate_killed_conditioned_until, KillCondResult};
pub use paths::{simulate_paths, Coefficients, Dynamics, PathEnsemble, PathFlag, PathRecord};
pub use weighted::{weighted_expectation, WeightedEstimate};

use thiserror::Error;

use crate::diffusion::DiffusionError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MonteCarloError {
    #[error("invalid simulation config: {0}")]
    ConfigInvalid(String),
    #[error("no path accepted out of {total} proposals")]
    NoAcceptedPaths { total: u64 },
    #[error("exact sampling is not available for {0}")]
    UnsupportedPreset(String),
    #[error("empty sample")]
    EmptySample,
    #[error("importance weights are not finite for {clipped} of {total} paths")]
    NonFiniteWeights { clipped: u64, total: u64 },
    #[error(transparent)]
    Diffusion(#[from] DiffusionError),
}

impl MonteCarloError {
    /// Share of paths whose weight was clipped, for `NonFiniteWeights`.
    pub fn clipped_fraction(&self) -> Option<f64> {
        match *self {
            MonteCarloError::NonFiniteWeights { clipped, total } => Some(clipped as f64 / total as f64),
            _ => None,
        }
    }
}
