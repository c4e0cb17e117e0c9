//! Chunked execution with a checkpoint after every chunk.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};

use crate::config::{sha256_hex, Config};
use crate::experiments::{build, ExperimentKind, RunState};
use crate::manifest::{Checkpoint, Manifest, CONFIG_FILE, MANIFEST_FILE, STATE_FILE, VERSION};
use crate::output::{csv_text, events_csv_text, pgm_bytes, write_atomic, write_json};

/// Result of one invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub dir: PathBuf,
    pub chunks_done: u64,
    pub complete: bool,
}

/// Starts a fresh run in `out` (default `runs/<experiment>-seed<seed>`).
pub fn start(kind: ExperimentKind, cfg: &Config, out: Option<&Path>, max_chunks: Option<u64>) -> Result<RunReport> {
    let named = cfg.get_str("run.experiment", kind.name())?;
    if named != kind.name() {
        bail!("`run.experiment` is `{named}` but the command runs `{}`", kind.name());
    }
    let state = build(kind, cfg)?;
    let seed = state.log().seed;
    let dir = match (out, cfg.get_opt("run.output_dir")) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(p)) => PathBuf::from(p),
        (None, None) => PathBuf::from(format!("runs/{}-seed{seed}", kind.name())),
    };
    cfg.check_unused()?;
    if dir.join(MANIFEST_FILE).exists() {
        bail!("{} already holds a run; use `resume` or another output directory", dir.display());
    }
    fs::create_dir_all(dir.join("metrics")).with_context(|| format!("creating {}", dir.display()))?;
    let config_text = cfg.canonical();
    write_atomic(&dir.join(CONFIG_FILE), config_text.as_bytes())?;
    let config_sha256 = sha256_hex(config_text.as_bytes());
    drive(&dir, kind, state, &config_sha256, 0, max_chunks)
}

/// Continues the run described by `manifest_path`.
pub fn resume(manifest_path: &Path, max_chunks: Option<u64>) -> Result<RunReport> {
    let m = Manifest::load(manifest_path)?;
    let dir = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let kind = ExperimentKind::from_name(&m.experiment).ok_or_else(|| anyhow!("unknown experiment `{}` in manifest", m.experiment))?;
    if m.complete {
        bail!("{}: run is already complete", manifest_path.display());
    }
    let config = fs::read(dir.join(&m.config_file)).with_context(|| format!("reading {}", m.config_file))?;
    if sha256_hex(&config) != m.config_sha256 {
        bail!("{}: configuration hash mismatch; refusing to resume", m.config_file);
    }
    let state_path = dir.join(&m.checkpoint.file);
    let bytes = fs::read(&state_path).with_context(|| format!("missing snapshot {}", state_path.display()))?;
    let found = sha256_hex(&bytes);
    if found != m.checkpoint.sha256 {
        bail!("{}: snapshot hash {found} does not match manifest {}; refusing to resume", state_path.display(), m.checkpoint.sha256);
    }
    let state: RunState = bincode::deserialize(&bytes).with_context(|| format!("{}: unreadable snapshot", state_path.display()))?;
    drive(&dir, kind, state, &m.config_sha256, m.chunks_done, max_chunks)
}

fn drive(dir: &Path, kind: ExperimentKind, mut state: RunState, config_sha256: &str, mut chunks_done: u64, max_chunks: Option<u64>) -> Result<RunReport> {
    let mut this_call = 0;
    loop {
        if max_chunks.is_some_and(|m| this_call >= m) {
            return Ok(RunReport { dir: dir.to_path_buf(), chunks_done, complete: false });
        }
        let complete = state.advance().map_err(|e| anyhow!("{} failed: {e}", kind.name()))?;
        chunks_done += 1;
        this_call += 1;
        persist(dir, kind, &state, config_sha256, chunks_done, complete)?;
        if complete {
            return Ok(RunReport { dir: dir.to_path_buf(), chunks_done, complete });
        }
    }
}

fn persist(dir: &Path, kind: ExperimentKind, state: &RunState, config_sha256: &str, chunks_done: u64, complete: bool) -> Result<()> {
    let log = state.log();
    for (name, table) in &log.metrics {
        write_atomic(&dir.join("metrics").join(format!("{name}.csv")), csv_text(table).as_bytes())?;
    }
    write_atomic(&dir.join("events.csv"), events_csv_text(&log.events).as_bytes())?;
    let bytes = bincode::serialize(state)?;
    write_atomic(&dir.join(STATE_FILE), &bytes)?;
    if complete {
        write_json(&dir.join("summary.json"), &state.summary()?)?;
        let images = state.images();
        if !images.is_empty() {
            fs::create_dir_all(dir.join("images"))?;
        }
        for (name, values) in images {
            write_atomic(&dir.join("images").join(format!("{name}.pgm")), &pgm_bytes(8, 8, &values)?)?;
        }
    }
    let manifest = Manifest {
        experiment: kind.name().to_string(),
        seed: log.seed,
        version: VERSION.to_string(),
        config_file: CONFIG_FILE.to_string(),
        config_sha256: config_sha256.to_string(),
        phase_boundaries_ms: log.phase_boundaries_ms.clone(),
        lesion_times_ms: log.events.iter().filter(|e| e.kind.starts_with("lesion")).map(|e| e.time_ms).collect(),
        chunks_done,
        complete,
        checkpoint: Checkpoint { file: STATE_FILE.to_string(), sha256: sha256_hex(&bytes) },
        metrics: log.metrics.keys().cloned().collect(),
    };
    // the manifest goes last so it never points at files not yet written
    write_json(&dir.join(MANIFEST_FILE), &manifest)
}
