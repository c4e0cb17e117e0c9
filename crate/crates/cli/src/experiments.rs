//! Experiment construction from a [`Config`] and the serializable run state.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use synsamp_core::harness::patterns::downsample_gray;
use synsamp_core::harness::{
    Compensation, CompensationConfig, Experiment, ExperimentLog, FixedPoint, FixedPointConfig, PosteriorSuite, PosteriorSuiteConfig,
    RbmGenConfig, RbmGeneralization, SurvivalStats, SurvivalStatsConfig, WtaAdaptConfig, WtaAdaptation,
};
use synsamp_core::priors::PriorSpec;

use crate::config::Config;
use crate::idx::{images_of_digit, load_idx};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    ValidatePosterior,
    RbmGeneralization,
    WtaAdapt,
    WtaFixedPoint,
    WtaLesion,
    SurvivalStats,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::ValidatePosterior,
        ExperimentKind::RbmGeneralization,
        ExperimentKind::WtaAdapt,
        ExperimentKind::WtaFixedPoint,
        ExperimentKind::WtaLesion,
        ExperimentKind::SurvivalStats,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::ValidatePosterior => "validate-posterior",
            ExperimentKind::RbmGeneralization => "rbm-generalization",
            ExperimentKind::WtaAdapt => "wta-adapt",
            ExperimentKind::WtaFixedPoint => "wta-fixed-point",
            ExperimentKind::WtaLesion => "wta-lesion",
            ExperimentKind::SurvivalStats => "survival-stats",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    fn default_seed(self) -> u64 {
        match self {
            ExperimentKind::ValidatePosterior => PosteriorSuiteConfig::default().seed,
            ExperimentKind::RbmGeneralization => RbmGenConfig::default().seed,
            ExperimentKind::WtaAdapt => WtaAdaptConfig::default().seed,
            ExperimentKind::WtaFixedPoint => FixedPointConfig::default().seed,
            ExperimentKind::WtaLesion => CompensationConfig::default().seed,
            ExperimentKind::SurvivalStats => SurvivalStatsConfig::default().seed,
        }
    }
}

/// State of a run in progress; serialized whole into checkpoints.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum RunState {
    Posterior(PosteriorSuite),
    Rbm(RbmGeneralization),
    Adapt(WtaAdaptation),
    FixedPoint(FixedPoint),
    Lesion(Compensation),
    Survival(SurvivalStats),
}

impl RunState {
    pub fn advance(&mut self) -> synsamp_core::Result<bool> {
        match self {
            RunState::Posterior(e) => e.advance(),
            RunState::Rbm(e) => e.advance(),
            RunState::Adapt(e) => e.advance(),
            RunState::FixedPoint(e) => e.advance(),
            RunState::Lesion(e) => e.advance(),
            RunState::Survival(e) => e.advance(),
        }
    }

    pub fn log(&self) -> &ExperimentLog {
        match self {
            RunState::Posterior(e) => e.log(),
            RunState::Rbm(e) => e.log(),
            RunState::Adapt(e) => e.log(),
            RunState::FixedPoint(e) => e.log(),
            RunState::Lesion(e) => e.log(),
            RunState::Survival(e) => e.log(),
        }
    }

    /// Experiment-specific end-of-run summary.
    pub fn summary(&self) -> Result<serde_json::Value> {
        Ok(match self {
            RunState::Posterior(e) => serde_json::to_value(&e.results)?,
            RunState::Rbm(e) => serde_json::to_value(e.summary())?,
            RunState::Adapt(e) => serde_json::to_value(e.summary()?)?,
            RunState::FixedPoint(e) => serde_json::to_value(e.report())?,
            RunState::Lesion(e) => serde_json::to_value(e.outcomes())?,
            RunState::Survival(e) => serde_json::to_value(e.summary())?,
        })
    }

    /// 8×8 images to export: name and row-major values in `[0, 1]`.
    pub fn images(&self) -> Vec<(String, Vec<f64>)> {
        let mut out = Vec::new();
        match self {
            RunState::Adapt(e) => {
                // each neuron's effective weights, scaled to its own maximum
                let net = e.simulator().network();
                for k in 0..net.n_hidden() {
                    let w: Vec<f64> = net.synapses_of(k).map(|s| net.w_hat()[s]).collect();
                    let hi = w.iter().cloned().fold(0.0, f64::max);
                    out.push((format!("weights_neuron{k:02}"), w.iter().map(|v| if hi > 0.0 { v / hi } else { 0.0 }).collect()));
                }
            }
            RunState::Lesion(e) => {
                if let Some(ev) = e.last_evaluation() {
                    for (c, img) in ev.images.iter().enumerate() {
                        out.push((format!("reconstruction_digit{}", c + 1), img.clone()));
                    }
                }
                for (c, m) in e.class_means().iter().enumerate() {
                    let hi = m.iter().cloned().fold(0.0, f64::max);
                    out.push((format!("class_mean_digit{}", c + 1), m.iter().map(|v| v / hi).collect()));
                }
            }
            _ => {}
        }
        out
    }
}

fn prior_from(cfg: &Config, default: &PriorSpec) -> Result<PriorSpec> {
    let kind = cfg.get_str(
        "prior.kind",
        match default {
            PriorSpec::Gaussian { .. } => "gaussian",
            PriorSpec::GaussianMixture2 { .. } => "bimodal",
            PriorSpec::Uniform { .. } => "uniform",
        },
    )?;
    Ok(match kind.as_str() {
        "bimodal" => {
            let d = match default {
                PriorSpec::GaussianMixture2 { .. } => *default,
                _ => PriorSpec::RBM_BIMODAL,
            };
            let PriorSpec::GaussianMixture2 { weight1, mean1, std1, mean2, std2 } = d else { unreachable!() };
            PriorSpec::GaussianMixture2 {
                weight1: cfg.get("prior.weight1", weight1)?,
                mean1: cfg.get("prior.mean1", mean1)?,
                std1: cfg.get("prior.std1", std1)?,
                mean2: cfg.get("prior.mean2", mean2)?,
                std2: cfg.get("prior.std2", std2)?,
            }
        }
        "gaussian" => {
            let (m, s) = match default {
                PriorSpec::Gaussian { mean, std } => (*mean, *std),
                _ => (0.0, 1.0),
            };
            PriorSpec::Gaussian { mean: cfg.get("prior.mean", m)?, std: cfg.get("prior.std", s)? }
        }
        "uniform" => PriorSpec::UNIFORM,
        other => bail!("`prior.kind`: expected bimodal, gaussian or uniform, found `{other}`"),
    })
}

/// 8×8 digit pools from an MNIST image/label pair.
fn mnist_digits(images: &Path, labels: &Path) -> Result<[Vec<Vec<u8>>; 2]> {
    let im = load_idx(images)?;
    let lb = load_idx(labels)?;
    if im.dims.len() != 3 {
        bail!("{}: expected an image file", images.display());
    }
    let (h, w) = (im.dims[1] as usize, im.dims[2] as usize);
    let mut pools: [Vec<Vec<u8>>; 2] = Default::default();
    for (d, pool) in [1u8, 2].into_iter().zip(pools.iter_mut()) {
        for img in images_of_digit(&im, &lb, d)? {
            pool.push(downsample_gray(&img, w, h, 8, 8).map_err(|e| anyhow!("{e}"))?);
        }
    }
    Ok(pools)
}

fn core<T>(r: synsamp_core::Result<T>) -> Result<T> {
    r.map_err(|e| anyhow!("invalid configuration: {e}"))
}

/// Reads every key the experiment understands, then builds it.
pub fn build(kind: ExperimentKind, cfg: &Config) -> Result<RunState> {
    let seed = cfg.get("run.seed", kind.default_seed())?;
    let state = match kind {
        ExperimentKind::ValidatePosterior => {
            let d = PosteriorSuiteConfig::default();
            let c = PosteriorSuiteConfig {
                observations: cfg.get_list("model.observations", &d.observations)?,
                prior_mean: cfg.get("model.prior_mean", d.prior_mean)?,
                prior_std: cfg.get("model.prior_std", d.prior_std)?,
                obs_std: cfg.get("model.obs_std", d.obs_std)?,
                b: cfg.get("sampler.b", d.b)?,
                dt: cfg.get("sampler.dt", d.dt)?,
                steps: cfg.get("sampler.steps", d.steps)?,
                chains: cfg.get("sampler.chains", d.chains)?,
                thin_moments: cfg.get("sampler.thin_moments_steps", d.thin_moments)?,
                thin_ks: cfg.get("sampler.thin_ks_steps", d.thin_ks)?,
                anneal_max_steps: cfg.get("sampler.anneal_max_steps", d.anneal_max_steps)?,
                online_b: cfg.get("online.b", d.online_b)?,
                online_dt: cfg.get("online.dt", d.online_dt)?,
                online_steps: cfg.get("online.steps", d.online_steps)?,
                online_chains: cfg.get("online.chains", d.online_chains)?,
                seed,
            };
            RunState::Posterior(core(PosteriorSuite::new(c))?)
        }
        ExperimentKind::RbmGeneralization => {
            let d = RbmGenConfig::default();
            let c = RbmGenConfig {
                n_hidden: cfg.get("model.n_hidden", d.n_hidden)?,
                n_test: cfg.get("model.n_test", d.n_test)?,
                prior: prior_from(cfg, &d.prior)?,
                b: cfg.get("sampler.b", d.b)?,
                dt: cfg.get("sampler.dt", d.dt)?,
                n_data: cfg.get("sampler.n_data", d.n_data)?,
                temperature: cfg.get("sampler.temperature", d.temperature)?,
                cd_k: cfg.get("sampler.cd_k", d.cd_k)?,
                updates: cfg.get("schedule.updates", d.updates)?,
                checkpoints: cfg.get("schedule.checkpoints", d.checkpoints)?,
                runs: cfg.get("schedule.runs", d.runs)?,
                seed,
            };
            RunState::Rbm(core(RbmGeneralization::new(c))?)
        }
        ExperimentKind::WtaAdapt => {
            let d = WtaAdaptConfig::default();
            let c = WtaAdaptConfig {
                n_hidden: cfg.get("model.n_hidden", d.n_hidden)?,
                gamma: cfg.get("model.gamma", d.gamma)?,
                b: cfg.get("sampler.b_per_s", d.b)?,
                param_interval_ms: cfg.get("sampler.param_interval_ms", d.param_interval_ms)?,
                pool_size: cfg.get("schedule.pool_size", d.pool_size)?,
                presentations_per_phase: cfg.get("schedule.presentations_per_phase", d.presentations_per_phase)?,
                checkpoints_per_phase: cfg.get("schedule.checkpoints_per_phase", d.checkpoints_per_phase)?,
                eval_trials: cfg.get("readout.eval_trials", d.eval_trials)?,
                readout_lambda: cfg.get("readout.lambda", d.readout_lambda)?,
                sparsity_bound: cfg.get("readout.sparsity_bound", d.sparsity_bound)?,
                seed,
            };
            match (cfg.get_opt("data.mnist_images"), cfg.get_opt("data.mnist_labels")) {
                (Some(i), Some(l)) => {
                    let [ones, twos] = mnist_digits(Path::new(&i), Path::new(&l)).context("loading digit data")?;
                    RunState::Adapt(core(WtaAdaptation::with_digits(c, &ones, &twos))?)
                }
                (None, None) => RunState::Adapt(core(WtaAdaptation::new(c))?),
                _ => bail!("`data.mnist_images` and `data.mnist_labels` must be given together"),
            }
        }
        ExperimentKind::WtaFixedPoint => {
            let d = FixedPointConfig::default();
            let c = FixedPointConfig {
                n_hidden: cfg.get("model.n_hidden", d.n_hidden)?,
                gamma: cfg.get("model.gamma", d.gamma)?,
                b: cfg.get("sampler.b_per_s", d.b)?,
                param_interval_ms: cfg.get("sampler.param_interval_ms", d.param_interval_ms)?,
                train_presentations: cfg.get("schedule.train_presentations", d.train_presentations)?,
                measure_presentations: cfg.get("schedule.measure_presentations", d.measure_presentations)?,
                chunk: cfg.get("schedule.chunk_presentations", d.chunk)?,
                stable_theta: cfg.get("analysis.stable_theta", d.stable_theta)?,
                min_spikes: cfg.get("analysis.min_spikes", d.min_spikes)?,
                tolerance: cfg.get("analysis.tolerance", d.tolerance)?,
                seed,
            };
            RunState::FixedPoint(core(FixedPoint::new(c))?)
        }
        ExperimentKind::WtaLesion => {
            let d = CompensationConfig::default();
            let c = CompensationConfig {
                circuits: cfg.get("model.circuits", d.circuits)?,
                circuit_size: cfg.get("model.circuit_size", d.circuit_size)?,
                within_lateral: cfg.get("model.within_lateral", d.within_lateral)?,
                gamma: cfg.get("model.gamma", d.gamma)?,
                frame_ms: cfg.get("stimulus.frame_ms", d.frame_ms)?,
                min_frames: cfg.get("stimulus.min_frames", d.min_frames)?,
                max_frames: cfg.get("stimulus.max_frames", d.max_frames)?,
                pad_ms: cfg.get("stimulus.pad_ms", d.pad_ms)?,
                utterances_per_class: cfg.get("stimulus.utterances_per_class", d.utterances_per_class)?,
                train_utterances: cfg.get("stimulus.train_utterances", d.train_utterances)?,
                visual_pool: cfg.get("stimulus.visual_pool", d.visual_pool)?,
                b: cfg.get("sampler.b_per_s", d.b)?,
                param_interval_ms: cfg.get("sampler.param_interval_ms", d.param_interval_ms)?,
                train_s: cfg.get("schedule.train_s", d.train_s)?,
                recovery_s: cfg.get("schedule.recovery_s", d.recovery_s)?,
                eval_every_s: cfg.get("schedule.eval_every_s", d.eval_every_s)?,
                eval_trials: cfg.get("readout.eval_trials", d.eval_trials)?,
                peth_trials: cfg.get("readout.peth_trials", d.peth_trials)?,
                encode_factor: cfg.get("readout.encode_factor", d.encode_factor)?,
                readout_lambda: cfg.get("readout.lambda", d.readout_lambda)?,
                seed,
            };
            RunState::Lesion(core(Compensation::new(c))?)
        }
        ExperimentKind::SurvivalStats => {
            let d = SurvivalStatsConfig::default();
            let c = SurvivalStatsConfig {
                n_hidden: cfg.get("model.n_hidden", d.n_hidden)?,
                gamma: cfg.get("model.gamma", d.gamma)?,
                b: cfg.get("sampler.b_per_s", d.b)?,
                param_interval_ms: cfg.get("sampler.param_interval_ms", d.param_interval_ms)?,
                snapshot_ms: cfg.get("schedule.snapshot_ms", d.snapshot_ms)?,
                duration_s: cfg.get("schedule.duration_s", d.duration_s)?,
                window_start_s: cfg.get("schedule.window_start_s", d.window_start_s)?,
                window_s: cfg.get("schedule.window_s", d.window_s)?,
                chunk_s: cfg.get("schedule.chunk_s", d.chunk_s)?,
                n_ages: cfg.get("analysis.n_ages", d.n_ages)?,
                level: cfg.get("analysis.level", d.level)?,
                fit_floor: cfg.get("analysis.fit_floor", d.fit_floor)?,
                seed,
            };
            RunState::Survival(core(SurvivalStats::new(c))?)
        }
    };
    Ok(state)
}
