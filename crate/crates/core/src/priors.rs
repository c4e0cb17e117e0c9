//! Factorized log-priors over individual parameters.
//!
//! Every backend uses one [`PriorSpec`] per parameter class. The uniform kind
//! is improper on purpose: only its gradient (identically zero) enters the
//! dynamics, so it needs no bounds unless it is sampled from.

use crate::error::{ensure, Error, Result};
use crate::math::{self, LN_SQRT_2PI};
use crate::rng::ChainRng;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PriorSpec {
    Gaussian {
        mean: f64,
        std: f64,
    },
    GaussianMixture2 {
        weight1: f64,
        mean1: f64,
        std1: f64,
        mean2: f64,
        std2: f64,
    },
    /// `bounds` is only consulted by [`sample_prior`].
    Uniform {
        bounds: Option<(f64, f64)>,
    },
}

impl PriorSpec {
    /// Prior on WTA synaptic parameters: `Normal(0.5, 1)`.
    pub const WTA: PriorSpec = PriorSpec::Gaussian { mean: 0.5, std: 1.0 };

    /// Bimodal prior on RBM weights: equal mixture of `Normal(1, 0.15²)` and
    /// `Normal(0, 0.15²)`.
    pub const RBM_BIMODAL: PriorSpec = PriorSpec::GaussianMixture2 {
        weight1: 0.5,
        mean1: 1.0,
        std1: 0.15,
        mean2: 0.0,
        std2: 0.15,
    };

    pub const UNIFORM: PriorSpec = PriorSpec::Uniform { bounds: None };

    pub fn validate(&self) -> Result<Prior> {
        match *self {
            PriorSpec::Gaussian { mean, std } => {
                ensure!(mean.is_finite(), "gaussian prior mean must be finite");
                ensure!(std > 0.0 && std.is_finite(), "gaussian prior std must be > 0, got {std}");
            }
            PriorSpec::GaussianMixture2 { weight1, mean1, std1, mean2, std2 } => {
                ensure!(
                    weight1 > 0.0 && weight1 < 1.0,
                    "mixture weight must lie in (0, 1), got {weight1}"
                );
                ensure!(mean1.is_finite() && mean2.is_finite(), "mixture means must be finite");
                ensure!(
                    std1 > 0.0 && std2 > 0.0 && std1.is_finite() && std2.is_finite(),
                    "mixture stds must be > 0"
                );
            }
            PriorSpec::Uniform { bounds } => {
                if let Some((lo, hi)) = bounds {
                    ensure!(lo < hi && lo.is_finite() && hi.is_finite(), "uniform bounds must satisfy lo < hi");
                }
            }
        }
        Ok(Prior(*self))
    }
}

/// A [`PriorSpec`] that passed validation. All evaluation goes through this.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "PriorSpec", into = "PriorSpec"))]
pub struct Prior(PriorSpec);

impl TryFrom<PriorSpec> for Prior {
    type Error = crate::error::Error;

    fn try_from(spec: PriorSpec) -> Result<Self> {
        spec.validate()
    }
}

impl From<Prior> for PriorSpec {
    fn from(p: Prior) -> Self {
        p.0
    }
}

impl Prior {
    pub fn spec(&self) -> &PriorSpec {
        &self.0
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.0, PriorSpec::Uniform { .. })
    }

    #[inline]
    pub fn grad(&self, theta: f64) -> f64 {
        match self.0 {
            PriorSpec::Gaussian { mean, std } => -(theta - mean) / (std * std),
            PriorSpec::GaussianMixture2 { mean1, std1, mean2, std2, .. } => {
                let (r1, r2) = self.responsibilities(theta);
                r1 * (-(theta - mean1) / (std1 * std1)) + r2 * (-(theta - mean2) / (std2 * std2))
            }
            PriorSpec::Uniform { .. } => 0.0,
        }
    }

    /// Log density; the uniform kind returns 0 (density up to a constant).
    pub fn log_density(&self, theta: f64) -> f64 {
        match self.0 {
            PriorSpec::Gaussian { mean, std } => gaussian_log_pdf(theta, mean, std),
            PriorSpec::GaussianMixture2 { weight1, mean1, std1, mean2, std2 } => math::log_sum_exp2(
                math::log(weight1) + gaussian_log_pdf(theta, mean1, std1),
                math::log(1.0 - weight1) + gaussian_log_pdf(theta, mean2, std2),
            ),
            PriorSpec::Uniform { .. } => 0.0,
        }
    }

    /// Posterior component memberships at `theta`. Single-component kinds
    /// report `(1, 0)`.
    pub fn responsibilities(&self, theta: f64) -> (f64, f64) {
        match self.0 {
            PriorSpec::GaussianMixture2 { weight1, mean1, std1, mean2, std2 } => {
                let l1 = math::log(weight1) + gaussian_log_pdf(theta, mean1, std1);
                let l2 = math::log(1.0 - weight1) + gaussian_log_pdf(theta, mean2, std2);
                let r1 = math::logistic(l1 - l2);
                (r1, 1.0 - r1)
            }
            _ => (1.0, 0.0),
        }
    }

    pub fn sample(&self, rng: &mut ChainRng) -> Result<f64> {
        match self.0 {
            PriorSpec::Gaussian { mean, std } => Ok(mean + std * rng.normal()),
            PriorSpec::GaussianMixture2 { weight1, mean1, std1, mean2, std2 } => {
                let u = rng.uniform();
                let z = rng.normal();
                Ok(if u < weight1 { mean1 + std1 * z } else { mean2 + std2 * z })
            }
            PriorSpec::Uniform { bounds: Some((lo, hi)) } => Ok(lo + (hi - lo) * rng.uniform()),
            PriorSpec::Uniform { bounds: None } => {
                Err(Error::arg("cannot sample an unbounded uniform prior"))
            }
        }
    }
}

#[inline]
fn gaussian_log_pdf(x: f64, mean: f64, std: f64) -> f64 {
    let z = (x - mean) / std;
    -0.5 * z * z - math::log(std) - LN_SQRT_2PI
}

/// `∂/∂θ log p_S(θ)` for a single parameter.
pub fn log_prior_grad(theta: f64, spec: &PriorSpec) -> Result<f64> {
    Ok(spec.validate()?.grad(theta))
}

/// `log p_S(θ)` for a single parameter (up to a constant for uniform).
pub fn log_prior_density(theta: f64, spec: &PriorSpec) -> Result<f64> {
    Ok(spec.validate()?.log_density(theta))
}

pub fn sample_prior(spec: &PriorSpec, rng: &mut ChainRng) -> Result<f64> {
    spec.validate()?.sample(rng)
}
