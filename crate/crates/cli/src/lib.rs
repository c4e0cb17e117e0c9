//! File formats, configuration and run orchestration for `synsamp`.

pub mod config;
pub mod experiments;
pub mod idx;
pub mod manifest;
pub mod output;
pub mod run;
pub mod sweep;

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

pub use config::Config;
pub use experiments::{ExperimentKind, RunState};
pub use run::{resume, start, RunReport};

/// Reads `path` (if any) and applies `section.key=value` overrides.
pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<Config> {
    let mut cfg = match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Config::parse(&text).with_context(|| format!("{}", p.display()))?
        }
        None => Config::default(),
    };
    for o in overrides {
        cfg.set(o)?;
    }
    Ok(cfg)
}
