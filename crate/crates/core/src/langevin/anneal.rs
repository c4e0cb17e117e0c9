use alloc::vec;

use super::config::{ParameterState, SamplerConfig};
use super::drift::{DataSel, DriftProvider};
use super::update::{apply_update, Workspace};
use crate::error::{ensure, Error, Result};
use crate::math;
use crate::rng::ChainRng;

/// Non-increasing temperature schedule ending at 0.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum TemperatureSchedule {
    /// `T = 0` from the first step.
    Zero,
    /// `T_k = start · ratio^k`, snapped to 0 once below `floor`.
    Geometric { start: f64, ratio: f64, floor: f64 },
    /// Linear ramp from `start` to 0 over `steps`.
    Linear { start: f64, steps: u64 },
}

impl TemperatureSchedule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TemperatureSchedule::Zero => Ok(()),
            TemperatureSchedule::Geometric { start, ratio, floor } => {
                ensure!(start >= 0.0 && start.is_finite(), "start temperature must be >= 0");
                ensure!(ratio > 0.0 && ratio < 1.0, "geometric ratio must lie in (0, 1)");
                ensure!(floor > 0.0, "floor must be > 0");
                Ok(())
            }
            TemperatureSchedule::Linear { start, steps } => {
                ensure!(start >= 0.0 && start.is_finite(), "start temperature must be >= 0");
                ensure!(steps >= 1, "linear schedule needs >= 1 step");
                Ok(())
            }
        }
    }

    pub fn at(&self, step: u64) -> f64 {
        match *self {
            TemperatureSchedule::Zero => 0.0,
            TemperatureSchedule::Geometric { start, ratio, floor } => {
                let t = start * libm::pow(ratio, step as f64);
                if t < floor {
                    0.0
                } else {
                    t
                }
            }
            TemperatureSchedule::Linear { start, steps } => {
                if step >= steps {
                    0.0
                } else {
                    start * (1.0 - step as f64 / steps as f64)
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnnealOptions {
    pub max_steps: u64,
    /// Stop early once `T = 0` and the posterior gradient norm drops below this.
    pub grad_tol: Option<f64>,
    /// Divergence guard on `‖θ‖₂`.
    pub guard: f64,
}

impl Default for AnnealOptions {
    fn default() -> Self {
        Self { max_steps: 100_000, grad_tol: None, guard: 1e12 }
    }
}

/// `‖∇ log p_S(θ) + ∇ log p_N(x|θ)‖₂` with the full data likelihood.
pub fn posterior_grad_norm<D: DriftProvider + ?Sized>(drift: &D, theta: &[f64]) -> f64 {
    let m = drift.dim();
    let mut p = vec![0.0; m];
    let mut l = vec![0.0; m];
    drift.prior_grad(theta, &mut p);
    drift.likelihood_grad(theta, DataSel::All, &mut l);
    math::sqrt(p.iter().zip(&l).map(|(a, b)| (a + b) * (a + b)).sum())
}

/// Batch dynamics under a cooling schedule. With [`TemperatureSchedule::Zero`]
/// this is plain gradient ascent on the log posterior scaled by `b(θ)·Δt`.
pub fn anneal_to_map<D: DriftProvider + ?Sized>(
    initial: ParameterState,
    drift: &D,
    cfg: &SamplerConfig,
    schedule: &TemperatureSchedule,
    opts: &AnnealOptions,
) -> Result<ParameterState> {
    cfg.validate()?;
    schedule.validate()?;
    ensure!(initial.values.len() == drift.dim(), "initial state has wrong dimension");
    let mut state = initial;
    let mut rng = ChainRng::seed_from_u64(cfg.seed);
    let mut ws = Workspace::new(drift.dim());
    let mut step_cfg = cfg.clone();
    for k in 0..opts.max_steps {
        step_cfg.temperature = schedule.at(k);
        drift.prior_grad(&state.values, &mut ws.prior);
        drift.likelihood_grad(&state.values, DataSel::All, &mut ws.likelihood);
        if let Some(tol) = opts.grad_tol {
            if step_cfg.temperature == 0.0 {
                let norm: f64 = ws.prior.iter().zip(&ws.likelihood).map(|(a, b)| (a + b) * (a + b)).sum();
                if math::sqrt(norm) < tol {
                    break;
                }
            }
        }
        apply_update(&mut state, &ws.prior, &ws.likelihood, 1.0, &step_cfg, &mut rng)?;
        let norm = math::sqrt(state.values.iter().map(|v| v * v).sum());
        if norm > opts.guard {
            return Err(Error::Divergence { norm, guard: opts.guard });
        }
    }
    Ok(state)
}
