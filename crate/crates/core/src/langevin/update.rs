use alloc::vec;
use alloc::vec::Vec;

use super::config::{ParameterState, SamplerConfig};
use super::drift::{DataSel, DriftProvider};
use crate::error::{Error, Result};
use crate::math;
use crate::rng::ChainRng;

/// Scratch buffers for gradient evaluation, reused across steps.
#[derive(Clone, Debug, Default)]
pub struct Workspace {
    pub prior: Vec<f64>,
    pub likelihood: Vec<f64>,
}

impl Workspace {
    pub fn new(dim: usize) -> Self {
        Self { prior: vec![0.0; dim], likelihood: vec![0.0; dim] }
    }

    pub(crate) fn ensure(&mut self, dim: usize) {
        self.prior.resize(dim, 0.0);
        self.likelihood.resize(dim, 0.0);
    }
}

/// One Euler-Maruyama step from precomputed gradients.
///
/// `likelihood_scale` is `1` when `likelihood_grad` already sums over the
/// whole data set and `N` when it is a single-input estimate. Noise is drawn in
/// index order and skipped entirely when `T = 0`.
pub fn apply_update(
    state: &mut ParameterState,
    prior_grad: &[f64],
    likelihood_grad: &[f64],
    likelihood_scale: f64,
    cfg: &SamplerConfig,
    rng: &mut ChainRng,
) -> Result<()> {
    let m = state.values.len();
    if prior_grad.len() != m || likelihood_grad.len() != m {
        return Err(Error::arg("gradient length does not match parameter count"));
    }
    for i in 0..m {
        if !prior_grad[i].is_finite() {
            return Err(Error::Numeric { index: i, what: "prior gradient" });
        }
        if !likelihood_grad[i].is_finite() {
            return Err(Error::Numeric { index: i, what: "likelihood gradient" });
        }
    }
    let dt = cfg.dt;
    let temp = cfg.temperature;
    for i in 0..m {
        let theta = state.values[i];
        let (b, db) = cfg.speed.eval(cfg.learning_rate_b, theta);
        let drift = b * prior_grad[i] + likelihood_scale * b * likelihood_grad[i] + temp * db;
        let mut delta = dt * drift;
        if temp > 0.0 {
            delta += math::sqrt(2.0 * temp * dt * b) * rng.normal();
        }
        if let Some(cap) = cfg.max_step {
            delta = delta.clamp(-cap, cap);
        }
        let mut next = theta + delta;
        if let Some((lo, hi)) = cfg.clip {
            next = next.clamp(lo, hi);
        }
        if !next.is_finite() {
            return Err(Error::Numeric { index: i, what: "parameter value" });
        }
        state.values[i] = next;
    }
    state.step_count += 1;
    state.time += dt;
    Ok(())
}

/// Evaluates the drift at the current state and applies one step.
///
/// `DataSel::All` follows the batch rule, `DataSel::Input(n)` the online rule
/// with the factor `N = cfg.dataset_size`.
pub fn discrete_update<D: DriftProvider + ?Sized>(
    state: &mut ParameterState,
    drift: &D,
    data: DataSel,
    cfg: &SamplerConfig,
    rng: &mut ChainRng,
    ws: &mut Workspace,
) -> Result<()> {
    let m = drift.dim();
    if state.values.len() != m {
        return Err(Error::arg("state dimension does not match drift provider"));
    }
    ws.ensure(m);
    drift.prior_grad(&state.values, &mut ws.prior);
    drift.likelihood_grad(&state.values, data, &mut ws.likelihood);
    let scale = match data {
        DataSel::All => 1.0,
        DataSel::Input(_) => cfg.dataset_size as f64,
    };
    apply_update(state, &ws.prior, &ws.likelihood, scale, cfg, rng)
}
