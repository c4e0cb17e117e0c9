use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use synsamp::experiments::ExperimentKind;
use synsamp::sweep::{sweep, SweepSpec};
use synsamp::{load_config, resume, start, RunReport};

#[derive(Parser)]
#[command(name = "synsamp", version, about = "Synaptic sampling experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Sectioned key-value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a key, e.g. `--set sampler.b_per_s=0.001`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Stop after this many chunks; continue later with `resume`.
    #[arg(long)]
    max_chunks: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Stationary-distribution checks on the conjugate Gaussian model.
    ValidatePosterior(Common),
    /// RBM test likelihood under prolonged training.
    RbmGeneralization {
        #[command(flatten)]
        common: Common,
        /// bimodal, uniform or gaussian.
        #[arg(long)]
        prior: Option<String>,
    },
    /// Three-phase digit adaptation of a WTA circuit.
    WtaAdapt(Common),
    /// Spike-triggered input averages against the fixed point.
    WtaFixedPoint(Common),
    /// Two lesions on a multi-circuit network and the recovery after each.
    WtaLesion(Common),
    /// Survival of functional synapses.
    SurvivalStats(Common),
    /// Independent seeded runs of one experiment, merged.
    Sweep {
        #[arg(value_enum)]
        experiment: ExperimentKind,
        /// Comma-separated seeds.
        #[arg(long, value_delimiter = ',', required = true)]
        seeds: Vec<u64>,
        /// Maximum concurrent processes.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Continue an interrupted run.
    Resume {
        manifest: PathBuf,
        #[arg(long)]
        max_chunks: Option<u64>,
    },
}

fn run_one(kind: ExperimentKind, c: Common, extra: Vec<String>) -> Result<RunReport> {
    let mut overrides = c.overrides;
    overrides.extend(extra);
    if let Some(s) = c.seed {
        overrides.push(format!("run.seed={s}"));
    }
    let cfg = load_config(c.config.as_deref(), &overrides)?;
    start(kind, &cfg, c.out.as_deref(), c.max_chunks)
}

fn report(r: RunReport) {
    let state = if r.complete { "complete" } else { "interrupted" };
    println!("{}: {state} after {} chunks", r.dir.display(), r.chunks_done);
}

fn main_inner() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::ValidatePosterior(c) => report(run_one(ExperimentKind::ValidatePosterior, c, vec![])?),
        Command::RbmGeneralization { common, prior } => {
            let extra = prior.map(|p| vec![format!("prior.kind={p}")]).unwrap_or_default();
            report(run_one(ExperimentKind::RbmGeneralization, common, extra)?)
        }
        Command::WtaAdapt(c) => report(run_one(ExperimentKind::WtaAdapt, c, vec![])?),
        Command::WtaFixedPoint(c) => report(run_one(ExperimentKind::WtaFixedPoint, c, vec![])?),
        Command::WtaLesion(c) => report(run_one(ExperimentKind::WtaLesion, c, vec![])?),
        Command::SurvivalStats(c) => report(run_one(ExperimentKind::SurvivalStats, c, vec![])?),
        Command::Sweep { experiment, seeds, jobs, config, overrides, out } => {
            let spec = SweepSpec { kind: experiment, seeds, jobs, config, overrides, out, exe: std::env::current_exe()? };
            let dir = sweep(&spec)?;
            println!("{}: merged", dir.display());
        }
        Command::Resume { manifest, max_chunks } => report(resume(&manifest, max_chunks)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
