mod cli;
mod commands;
mod manifest;

use std::io::Write as _;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use condiff::diffusion::{DiffusionSpec, ModelConfig};

use cli::{Cli, Command, Global};
use commands::{Context, Failure};
use manifest::{Invocation, RunManifest};

fn config_error(e: impl std::fmt::Display) -> Failure {
    Failure::Config(e.to_string())
}

/// Model file or inline spec, then `--set` overrides. Returns the spec and
/// its fully materialized model text.
fn load_model(global: &Global) -> Result<(DiffusionSpec, String), Failure> {
    let path = Path::new(&global.model);
    let mut cfg = if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
        ModelConfig::parse(&text)?
    } else {
        ModelConfig::parse_inline(&global.model)?
    };
    for kv in &global.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| config_error(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    let spec = cfg.resolve()?;
    let text = ModelConfig::from_spec(&spec).to_text();
    Ok((spec, text))
}

fn execute(cli: &Cli) -> Result<u8, Failure> {
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return Err(config_error("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(config_error)?;
    }
    let g = &cli.global;
    let (invocation, out) = match &cli.command {
        Command::Replay { manifest } => {
            let m = RunManifest::read(manifest).map_err(|e| config_error(format!("{e:#}")))?;
            let out = g.out.clone().unwrap_or(m.output);
            (m.invocation, Some(out))
        }
        cmd => {
            let (spec, model) = load_model(g)?;
            let command = commands::materialize(cmd, &spec);
            (Invocation { command, model, tol: g.tol, seed: g.seed }, g.out.clone())
        }
    };
    if !(invocation.tol > 0.0 && invocation.tol < 1.0) {
        return Err(config_error(format!("--tol must lie in (0, 1), got {}", invocation.tol)));
    }
    let spec = ModelConfig::parse(&invocation.model)?.resolve()?;

    let start = Instant::now();
    let ctx = Context { spec: &spec, tol: invocation.tol, seed: invocation.seed };
    let output = commands::run(&invocation.command, &ctx)?;
    let elapsed = start.elapsed().as_secs_f64();

    match out {
        Some(path) => {
            std::fs::write(&path, &output.text).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
            RunManifest::new(invocation, elapsed, path).write().map_err(|e| config_error(format!("{e:#}")))?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(output.text.as_bytes()).map_err(config_error)?;
        }
    }
    if let Some(note) = output.note {
        eprintln!("{note}");
    }
    Ok(output.exit)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors share exit code 1 with config errors.
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
