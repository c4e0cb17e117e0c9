//! Reference models with closed-form or cheaply enumerable posteriors.

use alloc::vec::Vec;

use super::drift::{DataSel, DriftProvider, LatentDrift};
use crate::error::{ensure, Result};
use crate::math;
use crate::priors::{Prior, PriorSpec};
use crate::rng::ChainRng;

/// Scalar mean with prior `N(μ₀, σ₀²)` and observations `xₙ ~ N(θ, σ²)`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConjugateGaussian {
    pub prior_mean: f64,
    pub prior_std: f64,
    pub obs_std: f64,
    pub obs: Vec<f64>,
}

impl ConjugateGaussian {
    pub fn new(prior_mean: f64, prior_std: f64, obs_std: f64, obs: Vec<f64>) -> Result<Self> {
        ensure!(prior_std > 0.0 && obs_std > 0.0, "standard deviations must be > 0");
        ensure!(!obs.is_empty(), "need at least one observation");
        ensure!(obs.iter().all(|x| x.is_finite()), "observations must be finite");
        Ok(Self { prior_mean, prior_std, obs_std, obs })
    }

    pub fn posterior_precision(&self) -> f64 {
        1.0 / (self.prior_std * self.prior_std) + self.obs.len() as f64 / (self.obs_std * self.obs_std)
    }

    pub fn posterior_mean(&self) -> f64 {
        let s: f64 = self.obs.iter().sum();
        (self.prior_mean / (self.prior_std * self.prior_std) + s / (self.obs_std * self.obs_std))
            / self.posterior_precision()
    }

    pub fn posterior_variance(&self) -> f64 {
        1.0 / self.posterior_precision()
    }

    /// CDF of the tempered posterior `∝ p(θ|x)^(1/T)`.
    pub fn tempered_cdf(&self, theta: f64, temperature: f64) -> f64 {
        let sd = math::sqrt(temperature * self.posterior_variance());
        math::normal_cdf((theta - self.posterior_mean()) / sd)
    }

    fn obs_slice(&self, data: DataSel) -> &[f64] {
        match data {
            DataSel::All => &self.obs,
            DataSel::Input(n) => core::slice::from_ref(&self.obs[n]),
        }
    }
}

impl DriftProvider for ConjugateGaussian {
    fn dim(&self) -> usize {
        1
    }
    fn n_inputs(&self) -> usize {
        self.obs.len()
    }
    fn log_prior(&self, theta: &[f64]) -> f64 {
        let z = (theta[0] - self.prior_mean) / self.prior_std;
        -0.5 * z * z - math::log(self.prior_std) - math::LN_SQRT_2PI
    }
    fn prior_grad(&self, theta: &[f64], out: &mut [f64]) {
        out[0] = -(theta[0] - self.prior_mean) / (self.prior_std * self.prior_std);
    }
    fn log_likelihood(&self, theta: &[f64], data: DataSel) -> f64 {
        let c = math::log(self.obs_std) + math::LN_SQRT_2PI;
        self.obs_slice(data)
            .iter()
            .map(|x| {
                let z = (x - theta[0]) / self.obs_std;
                -0.5 * z * z - c
            })
            .sum()
    }
    fn likelihood_grad(&self, theta: &[f64], data: DataSel, out: &mut [f64]) {
        let v = self.obs_std * self.obs_std;
        out[0] = self.obs_slice(data).iter().map(|x| (x - theta[0]) / v).sum();
    }
}

/// Equal-weight two-component 1-D Gaussian mixture with unknown means
/// `θ = (μ₁, μ₂)`, known spread `σ` and a factorized prior on the means.
/// The component label of each observation is the hidden state.
#[derive(Clone, Debug)]
pub struct GaussianMixtureMeans {
    pub obs: Vec<f64>,
    pub sigma: f64,
    prior: Prior,
}

impl GaussianMixtureMeans {
    pub fn new(obs: Vec<f64>, sigma: f64, prior: PriorSpec) -> Result<Self> {
        ensure!(sigma > 0.0, "sigma must be > 0");
        ensure!(!obs.is_empty(), "need at least one observation");
        Ok(Self { obs, sigma, prior: prior.validate()? })
    }

    fn component_log(&self, x: f64, mu: f64) -> f64 {
        let z = (x - mu) / self.sigma;
        -0.5 * z * z - math::log(self.sigma) - math::LN_SQRT_2PI + math::log(0.5)
    }

    /// Posterior probability that `x` belongs to component 1.
    pub fn responsibility(&self, x: f64, theta: &[f64]) -> f64 {
        math::logistic(self.component_log(x, theta[0]) - self.component_log(x, theta[1]))
    }

    fn obs_range(&self, data: DataSel) -> &[f64] {
        match data {
            DataSel::All => &self.obs,
            DataSel::Input(n) => core::slice::from_ref(&self.obs[n]),
        }
    }
}

impl DriftProvider for GaussianMixtureMeans {
    fn dim(&self) -> usize {
        2
    }
    fn n_inputs(&self) -> usize {
        self.obs.len()
    }
    fn log_prior(&self, theta: &[f64]) -> f64 {
        self.prior.log_density(theta[0]) + self.prior.log_density(theta[1])
    }
    fn prior_grad(&self, theta: &[f64], out: &mut [f64]) {
        out[0] = self.prior.grad(theta[0]);
        out[1] = self.prior.grad(theta[1]);
    }
    fn log_likelihood(&self, theta: &[f64], data: DataSel) -> f64 {
        self.obs_range(data)
            .iter()
            .map(|&x| math::log_sum_exp2(self.component_log(x, theta[0]), self.component_log(x, theta[1])))
            .sum()
    }
    fn likelihood_grad(&self, theta: &[f64], data: DataSel, out: &mut [f64]) {
        let v = self.sigma * self.sigma;
        out[0] = 0.0;
        out[1] = 0.0;
        for &x in self.obs_range(data) {
            let r = self.responsibility(x, theta);
            out[0] += r * (x - theta[0]) / v;
            out[1] += (1.0 - r) * (x - theta[1]) / v;
        }
    }
}

impl LatentDrift for GaussianMixtureMeans {
    type Latent = usize;

    fn dim(&self) -> usize {
        2
    }
    fn n_inputs(&self) -> usize {
        self.obs.len()
    }
    fn log_prior(&self, theta: &[f64]) -> f64 {
        DriftProvider::log_prior(self, theta)
    }
    fn prior_grad(&self, theta: &[f64], out: &mut [f64]) {
        DriftProvider::prior_grad(self, theta, out)
    }
    fn sample_latent(&self, theta: &[f64], input: usize, rng: &mut ChainRng) -> usize {
        if rng.uniform() < self.responsibility(self.obs[input], theta) {
            0
        } else {
            1
        }
    }
    fn joint_likelihood_grad(&self, theta: &[f64], input: usize, latent: &usize, out: &mut [f64]) {
        out[0] = 0.0;
        out[1] = 0.0;
        out[*latent] = (self.obs[input] - theta[*latent]) / (self.sigma * self.sigma);
    }
}
