use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "condiff", version, about = "Diffusions conditioned to drift to +infinity")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Model file, or an inline spec such as `logistic` or `preset=gbm,mu=0.2`.
    #[arg(long, global = true, default_value = "bm_drift")]
    pub model: String,
    /// Override one model key; applied after the model, may repeat.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Accuracy target for scale-function quadrature.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file; a `<out>.manifest.json` is written next to it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for path simulation. Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Tabulate B, s', s and m' on a grid `lo:hi:n`.
    Scale {
        #[arg(long)]
        grid: String,
    },
    /// Tabulate the drift b and the conditioned drift b~ on a grid `lo:hi:n`.
    Condition {
        #[arg(long)]
        grid: String,
    },
    /// Simulate the base or conditioned process and write its marginal.
    Simulate {
        #[arg(long)]
        conditioned: bool,
        /// Start point, defaults to the reference point w.
        #[arg(long, allow_negative_numbers = true)]
        x0: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[arg(long, default_value_t = 10_000)]
        paths: u64,
        #[arg(long, allow_negative_numbers = true)]
        lower_guard: Option<f64>,
        #[arg(long)]
        cap: Option<f64>,
        /// Write `path_id,flag,t,value` rows for every step instead of the marginal.
        #[arg(long)]
        full_path: bool,
    },
    /// Compare the killing-and-conditioning sampler with the conditioned
    /// process and check the importance weights.
    Verify {
        #[arg(long, default_value_t = 0.05)]
        lambda: f64,
        #[arg(long, default_value_t = 8.0, allow_negative_numbers = true)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        /// Proposals for the rejection sampler.
        #[arg(long, default_value_t = 200_000)]
        paths: u64,
        #[arg(long, allow_negative_numbers = true)]
        x0: Option<f64>,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        /// Samples of the conditioned law the accepted paths are compared with.
        #[arg(long, default_value_t = 20_000)]
        reference_paths: u64,
        /// Paths for the weighted-versus-direct checks.
        #[arg(long, default_value_t = 20_000)]
        check_paths: u64,
        #[arg(long, default_value_t = 0.03)]
        ks_threshold: f64,
    },
    /// P^y{T_z < inf} = s(y)/s(z) for y < z.
    Hitprob {
        #[arg(long, allow_negative_numbers = true)]
        y: f64,
        #[arg(long, allow_negative_numbers = true)]
        z: f64,
    },
    /// Check that the process drifts to ell: s(ell+) finite and s(inf) infinite.
    Check,
    /// Re-run the command recorded in a manifest.
    Replay { manifest: PathBuf },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Scale { .. } => "scale",
            Command::Condition { .. } => "condition",
            Command::Simulate { .. } => "simulate",
            Command::Verify { .. } => "verify",
            Command::Hitprob { .. } => "hitprob",
            Command::Check => "check",
            Command::Replay { .. } => "replay",
        }
    }
}
