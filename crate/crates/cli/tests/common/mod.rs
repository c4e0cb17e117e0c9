#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const POSTERIOR: &str = "\
[sampler]
b = 1.0
dt = 0.002
steps = 20000
chains = 2
thin_moments_steps = 20
thin_ks_steps = 400
anneal_max_steps = 20000

[online]
b = 1.0
dt = 0.0002
steps = 20000
chains = 2
";

pub const RBM: &str = "\
[schedule]
updates = 2000
checkpoints = 6
runs = 2
";

pub const ADAPT: &str = "\
[schedule]
presentations_per_phase = 12
checkpoints_per_phase = 2
pool_size = 4

[readout]
eval_trials = 8

[sampler]
b_per_s = 0.02
";

pub const FIXED_POINT: &str = "\
[schedule]
train_presentations = 10
measure_presentations = 10
chunk_presentations = 4

[analysis]
min_spikes = 1
stable_theta = -inf
";

pub const LESION: &str = "\
[model]
circuits = 1
circuit_size = 4

[stimulus]
min_frames = 2
max_frames = 3
utterances_per_class = 3
train_utterances = 2
visual_pool = 2

[sampler]
b_per_s = 0.01

[schedule]
train_s = 2
recovery_s = 1
eval_every_s = 1

[readout]
eval_trials = 8
peth_trials = 4
encode_factor = 1
";

pub const SURVIVAL: &str = "\
[model]
n_hidden = 3

[sampler]
b_per_s = 0.05

[schedule]
duration_s = 60
window_s = 20
chunk_s = 20
snapshot_ms = 100

[analysis]
n_ages = 12
fit_floor = 0.01
";

/// Every experiment with a configuration that finishes in seconds.
pub const TINY: [(&str, &str); 6] = [
    ("validate-posterior", POSTERIOR),
    ("rbm-generalization", RBM),
    ("wta-adapt", ADAPT),
    ("wta-fixed-point", FIXED_POINT),
    ("wta-lesion", LESION),
    ("survival-stats", SURVIVAL),
];

pub fn exe() -> &'static str {
    env!("CARGO_BIN_EXE_synsamp")
}

pub fn synsamp(args: &[&str]) -> Output {
    Command::new(exe()).args(args).output().expect("binary runs")
}

pub fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(format!("{name}.txt"));
    fs::write(&p, text).unwrap();
    p
}

/// Runs `experiment` to completion; panics with stderr on failure.
pub fn run_tiny(experiment: &str, config: &Path, out: &Path, extra: &[&str]) {
    let mut args = vec![experiment, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = synsamp(&args);
    assert!(o.status.success(), "{experiment}: {}", String::from_utf8_lossy(&o.stderr));
}

/// Metric CSVs and events of a run directory, by relative path.
pub fn logs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in fs::read_dir(dir.join("metrics")).unwrap() {
        let p = e.unwrap().path();
        out.insert(format!("metrics/{}", p.file_name().unwrap().to_string_lossy()), fs::read(&p).unwrap());
    }
    out.insert("events.csv".into(), fs::read(dir.join("events.csv")).unwrap());
    out
}
