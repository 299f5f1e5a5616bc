use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use serde::{Deserialize, Serialize};

use crate::cli::Command;

/// Everything needed to re-run a command: the materialized model text and
/// every flag that affects output. Thread count is left out on purpose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Invocation {
    pub command: Command,
    pub model: String,
    pub tol: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub invocation: Invocation,
    pub seed: u64,
    pub tool_version: String,
    pub duration_seconds: f64,
    pub output: PathBuf,
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

impl RunManifest {
    pub fn new(invocation: Invocation, duration_seconds: f64, output: PathBuf) -> Self {
        RunManifest {
            command: invocation.command.name().to_string(),
            seed: invocation.seed,
            invocation,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            duration_seconds,
            output,
        }
    }

    pub fn write(&self) -> Result<PathBuf> {
        let path = manifest_path(&self.output);
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let inv = Invocation {
            command: Command::Scale { grid: "0:1:3".into() },
            model: "preset=bm_drift\nmu=0.5\nell=-inf\nw=0.0\n".into(),
            tol: 1e-8,
            seed: 3,
        };
        let m = RunManifest::new(inv, 0.25, PathBuf::from("x.csv"));
        let back: RunManifest = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(manifest_path(Path::new("a/b.csv")), PathBuf::from("a/b.csv.manifest.json"));
    }
}
