//! Experiment driver for `ramsey-core`: resolves a JSON config, runs one
//! experiment and writes `<kind>.csv` plus a `run.json` manifest into a fresh
//! run directory.

pub mod cli;
pub mod config;
pub mod experiments;
pub mod table;

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub use config::{ConfigError, ExperimentConfig, ExperimentKind, Overrides, SchemeSpec};
pub use experiments::{run_experiment, ExperimentOutput};
pub use table::{Cell, Table};

pub const ARTIFACT: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact: String,
    pub version: String,
    pub kind: ExperimentKind,
    pub seed: u64,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub csv: String,
    pub rows: usize,
    pub started_at: String,
    pub wall_time_seconds: f64,
    pub summary: Value,
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub csv: PathBuf,
    pub manifest: PathBuf,
}

/// Hex SHA-256 of the canonical JSON form of `cfg`.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let bytes = serde_json::to_vec(cfg).expect("config serializes");
    Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Runs `cfg` and writes its artifacts under `out_root`.
pub fn execute(cfg: &ExperimentConfig, out_root: &Path) -> anyhow::Result<RunArtifacts> {
    let started = chrono::Utc::now();
    let clock = Instant::now();
    let kind = cfg.kind();
    let output = run_experiment(cfg).with_context(|| format!("{kind} failed"))?;
    let csv_bytes = output.table.to_csv()?;
    let wall = clock.elapsed().as_secs_f64();

    let hash = config_hash(cfg);
    let stem = format!("{kind}-{}-{}", started.format("%Y%m%dT%H%M%SZ"), &hash[..8]);
    std::fs::create_dir_all(out_root)
        .with_context(|| format!("creating {}", out_root.display()))?;
    let dir = unique_dir(out_root, &stem)?;

    let csv_name = format!("{kind}.csv");
    let csv = dir.join(&csv_name);
    std::fs::write(&csv, &csv_bytes).with_context(|| format!("writing {}", csv.display()))?;
    let manifest = RunManifest {
        artifact: ARTIFACT.into(),
        version: VERSION.into(),
        kind,
        seed: cfg.seed,
        config_hash: hash,
        config: cfg.clone(),
        csv: csv_name,
        rows: output.table.rows.len(),
        started_at: started.to_rfc3339(),
        wall_time_seconds: wall,
        summary: output.summary,
    };
    let manifest_path = dir.join("run.json");
    std::fs::write(
        &manifest_path,
        serde_json::to_string_pretty(&manifest)? + "\n",
    )
    .with_context(|| format!("writing {}", manifest_path.display()))?;
    Ok(RunArtifacts {
        dir,
        csv,
        manifest: manifest_path,
    })
}

/// Same-second reruns of one config get a numeric suffix.
fn unique_dir(root: &Path, stem: &str) -> anyhow::Result<PathBuf> {
    for i in 0u32.. {
        let name = if i == 0 {
            stem.to_owned()
        } else {
            format!("{stem}-{i}")
        };
        let dir = root.join(name);
        match std::fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e).with_context(|| format!("creating {}", dir.display())),
        }
    }
    unreachable!()
}
