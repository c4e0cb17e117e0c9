//! Per-run manifest: everything needed to reproduce or resume a run.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

pub const VERSION: &str = concat!("synsamp ", env!("CARGO_PKG_VERSION"));
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.txt";
pub const STATE_FILE: &str = "state.bin";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub file: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: String,
    pub seed: u64,
    pub version: String,
    /// File name of the resolved configuration, relative to the manifest.
    pub config_file: String,
    pub config_sha256: String,
    pub phase_boundaries_ms: Vec<f64>,
    pub lesion_times_ms: Vec<f64>,
    pub chunks_done: u64,
    pub complete: bool,
    pub checkpoint: Checkpoint,
    /// Metric names; each has `metrics/<name>.csv`.
    pub metrics: Vec<String>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("{}: not a run manifest", path.display()))
    }
}
