//! Independent seeded runs in child processes, merged afterwards.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};

use anyhow::{bail, Context, Result};
use serde::Serialize;

use crate::experiments::ExperimentKind;
use crate::output::{write_atomic, write_json};

#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub kind: ExperimentKind,
    pub seeds: Vec<u64>,
    pub jobs: usize,
    pub config: Option<PathBuf>,
    pub overrides: Vec<String>,
    pub out: PathBuf,
    pub exe: PathBuf,
}

#[derive(Debug, Serialize)]
struct SeedStatus {
    seed: u64,
    dir: String,
    exit_code: Option<i32>,
}

#[derive(Debug, Serialize)]
struct SweepRecord {
    experiment: String,
    seeds: Vec<SeedStatus>,
    merged: Vec<String>,
}

fn seed_dir(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("seed{seed}"))
}

fn spawn(spec: &SweepSpec, seed: u64) -> Result<Child> {
    let mut cmd = Command::new(&spec.exe);
    cmd.arg(spec.kind.name());
    if let Some(c) = &spec.config {
        cmd.arg("--config").arg(c);
    }
    for o in &spec.overrides {
        cmd.arg("--set").arg(o);
    }
    cmd.arg("--seed").arg(seed.to_string()).arg("--out").arg(seed_dir(&spec.out, seed));
    cmd.stdout(Stdio::null());
    cmd.spawn().with_context(|| format!("launching {}", spec.exe.display()))
}

/// Runs every seed with at most `jobs` processes alive, then merges the
/// metric CSVs with a leading `seed` column. Fails if any seed failed.
pub fn sweep(spec: &SweepSpec) -> Result<PathBuf> {
    if spec.seeds.is_empty() || spec.jobs == 0 {
        bail!("a sweep needs at least one seed and one job");
    }
    fs::create_dir_all(&spec.out)?;
    let mut running: Vec<(u64, Child)> = Vec::new();
    let mut codes: BTreeMap<u64, Option<i32>> = BTreeMap::new();
    for &seed in &spec.seeds {
        if running.len() == spec.jobs {
            let (s, mut child) = running.remove(0);
            codes.insert(s, child.wait()?.code());
        }
        running.push((seed, spawn(spec, seed)?));
    }
    for (s, mut child) in running {
        codes.insert(s, child.wait()?.code());
    }

    let mut merged: BTreeMap<String, (String, String)> = BTreeMap::new();
    for &seed in &spec.seeds {
        if codes[&seed] != Some(0) {
            continue;
        }
        let metrics = seed_dir(&spec.out, seed).join("metrics");
        let mut names: Vec<PathBuf> = fs::read_dir(&metrics)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
        names.sort();
        for path in names.into_iter().filter(|p| p.extension().is_some_and(|e| e == "csv")) {
            let text = fs::read_to_string(&path)?;
            let mut lines = text.lines();
            let header = lines.next().unwrap_or_default();
            let name = path.file_stem().unwrap().to_string_lossy().into_owned();
            let entry = merged.entry(name.clone()).or_insert_with(|| (format!("seed,{header}\n"), String::new()));
            if entry.0 != format!("seed,{header}\n") {
                bail!("seed {seed}: `{name}` columns differ from other seeds");
            }
            for l in lines {
                entry.1.push_str(&format!("{seed},{l}\n"));
            }
        }
    }
    let merged_dir = spec.out.join("merged");
    fs::create_dir_all(&merged_dir)?;
    for (name, (header, body)) in &merged {
        write_atomic(&merged_dir.join(format!("{name}.csv")), format!("{header}{body}").as_bytes())?;
    }
    let record = SweepRecord {
        experiment: spec.kind.name().to_string(),
        seeds: spec.seeds.iter().map(|&s| SeedStatus { seed: s, dir: format!("seed{s}"), exit_code: codes[&s] }).collect(),
        merged: merged.keys().cloned().collect(),
    };
    write_json(&spec.out.join("sweep.json"), &record)?;
    let failed: Vec<u64> = codes.iter().filter(|(_, c)| **c != Some(0)).map(|(s, _)| *s).collect();
    if !failed.is_empty() {
        bail!("seeds {failed:?} failed; see {}", spec.out.join("sweep.json").display());
    }
    Ok(spec.out.clone())
}
