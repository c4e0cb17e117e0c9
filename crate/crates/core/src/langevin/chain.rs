use alloc::vec::Vec;

use super::config::{ParameterState, SamplerConfig};
use super::drift::{DataSel, DriftProvider, LatentDrift};
use super::update::{apply_update, discrete_update, Workspace};
use crate::error::{ensure, Error, Result};
use crate::rng::ChainRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum InputOrder {
    #[default]
    Cyclic,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum ChainMode {
    Batch,
    Online { order: InputOrder },
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChainOptions {
    pub n_steps: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub mode: ChainMode,
}

impl ChainOptions {
    /// 20% burn-in, every sample kept.
    pub fn new(n_steps: u64, mode: ChainMode) -> Self {
        Self { n_steps, burn_in: n_steps / 5, thin: 1, mode }
    }

    pub fn thin(mut self, thin: u64) -> Self {
        self.thin = thin;
        self
    }

    pub fn burn_in(mut self, burn_in: u64) -> Self {
        self.burn_in = burn_in;
        self
    }

    fn validate(&self) -> Result<()> {
        ensure!(
            self.n_steps > self.burn_in,
            "n_steps ({}) must exceed burn_in ({})",
            self.n_steps,
            self.burn_in
        );
        ensure!(self.thin >= 1, "thin must be >= 1");
        Ok(())
    }

    fn keeps(&self, step: u64) -> bool {
        step > self.burn_in && (step - self.burn_in) % self.thin == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChainTrajectory {
    pub samples: Vec<ParameterState>,
    pub burn_in: u64,
    pub thin: u64,
}

impl ChainTrajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples.first().map_or(0, |s| s.values.len())
    }

    /// Trace of one coordinate.
    pub fn component(&self, index: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.values[index]).collect()
    }

    /// Concatenates chains run with identical options.
    pub fn pooled(chains: &[ChainTrajectory]) -> Result<ChainTrajectory> {
        let first = chains.first().ok_or_else(|| Error::arg("no chains to pool"))?;
        let mut samples = Vec::new();
        for c in chains {
            ensure!(c.dim() == first.dim(), "pooled chains differ in dimension");
            samples.extend(c.samples.iter().cloned());
        }
        Ok(ChainTrajectory { samples, burn_in: first.burn_in, thin: first.thin })
    }
}

/// A single-threaded sampler that owns its state, RNG and input cursor.
#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Chain {
    pub state: ParameterState,
    pub cfg: SamplerConfig,
    pub rng: ChainRng,
    cursor: usize,
    #[cfg_attr(feature = "serde", serde(skip))]
    ws: Workspace,
}

impl Chain {
    pub fn new(initial: ParameterState, cfg: SamplerConfig) -> Result<Self> {
        cfg.validate()?;
        let rng = ChainRng::seed_from_u64(cfg.seed);
        Ok(Self { state: initial, cfg, rng, cursor: 0, ws: Workspace::default() })
    }

    fn next_input(&mut self, n_inputs: usize, order: InputOrder) -> Result<usize> {
        ensure!(n_inputs > 0, "online mode needs at least one input");
        Ok(match order {
            InputOrder::Cyclic => {
                let n = self.cursor % n_inputs;
                self.cursor = (n + 1) % n_inputs;
                n
            }
            InputOrder::Random => self.rng.index(n_inputs),
        })
    }

    pub fn step<D: DriftProvider + ?Sized>(&mut self, drift: &D, mode: ChainMode) -> Result<()> {
        let data = match mode {
            ChainMode::Batch => DataSel::All,
            ChainMode::Online { order } => DataSel::Input(self.next_input(drift.n_inputs(), order)?),
        };
        discrete_update(&mut self.state, drift, data, &self.cfg, &mut self.rng, &mut self.ws)
    }

    /// One step of the hidden-state dynamics. In batch mode a hidden state is
    /// drawn for every input and the joint gradients are summed.
    pub fn step_latent<L: LatentDrift + ?Sized>(&mut self, drift: &L, mode: ChainMode) -> Result<()> {
        let m = drift.dim();
        ensure!(self.state.values.len() == m, "state dimension does not match drift provider");
        self.ws.ensure(m);
        drift.prior_grad(&self.state.values, &mut self.ws.prior);
        let scale = match mode {
            ChainMode::Online { order } => {
                let n = self.next_input(drift.n_inputs(), order)?;
                let z = drift.sample_latent(&self.state.values, n, &mut self.rng);
                drift.joint_likelihood_grad(&self.state.values, n, &z, &mut self.ws.likelihood);
                self.cfg.dataset_size as f64
            }
            ChainMode::Batch => {
                let mut acc = alloc::vec![0.0; m];
                for n in 0..drift.n_inputs() {
                    let z = drift.sample_latent(&self.state.values, n, &mut self.rng);
                    drift.joint_likelihood_grad(&self.state.values, n, &z, &mut self.ws.likelihood);
                    for (a, g) in acc.iter_mut().zip(&self.ws.likelihood) {
                        *a += g;
                    }
                }
                self.ws.likelihood.copy_from_slice(&acc);
                1.0
            }
        };
        apply_update(&mut self.state, &self.ws.prior, &self.ws.likelihood, scale, &self.cfg, &mut self.rng)
    }
}

/// Runs a chain from `initial`, seeded by `cfg.seed`. Identical inputs give a
/// bit-identical trajectory.
pub fn run_chain<D: DriftProvider + ?Sized>(
    initial: ParameterState,
    drift: &D,
    cfg: &SamplerConfig,
    opts: &ChainOptions,
) -> Result<ChainTrajectory> {
    opts.validate()?;
    ensure!(initial.values.len() == drift.dim(), "initial state has wrong dimension");
    let mut chain = Chain::new(initial, cfg.clone())?;
    let mut samples = Vec::with_capacity(((opts.n_steps - opts.burn_in) / opts.thin) as usize);
    for step in 1..=opts.n_steps {
        chain.step(drift, opts.mode)?;
        if opts.keeps(step) {
            samples.push(chain.state.clone());
        }
    }
    Ok(ChainTrajectory { samples, burn_in: opts.burn_in, thin: opts.thin })
}

/// [`run_chain`] for models with per-input hidden state.
pub fn run_chain_with_hidden<L: LatentDrift + ?Sized>(
    initial: ParameterState,
    drift: &L,
    cfg: &SamplerConfig,
    opts: &ChainOptions,
) -> Result<ChainTrajectory> {
    opts.validate()?;
    ensure!(initial.values.len() == drift.dim(), "initial state has wrong dimension");
    let mut chain = Chain::new(initial, cfg.clone())?;
    let mut samples = Vec::with_capacity(((opts.n_steps - opts.burn_in) / opts.thin) as usize);
    for step in 1..=opts.n_steps {
        chain.step_latent(drift, opts.mode)?;
        if opts.keeps(step) {
            samples.push(chain.state.clone());
        }
    }
    Ok(ChainTrajectory { samples, burn_in: opts.burn_in, thin: opts.thin })
}
