use crate::rng::ChainRng;

/// Which inputs a likelihood term covers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DataSel {
    /// Sum over all `N` inputs (batch rule).
    All,
    /// A single input `xⁿ` (online rule; scaled by `N` in the update).
    Input(usize),
}

/// Gradients of the log prior and log likelihood of a model.
///
/// The log-density methods exist so that every provider can be checked
/// against finite differences; the sampler itself only calls the gradients.
pub trait DriftProvider {
    fn dim(&self) -> usize;
    fn n_inputs(&self) -> usize;
    fn log_prior(&self, theta: &[f64]) -> f64;
    fn prior_grad(&self, theta: &[f64], out: &mut [f64]);
    fn log_likelihood(&self, theta: &[f64], data: DataSel) -> f64;
    fn likelihood_grad(&self, theta: &[f64], data: DataSel, out: &mut [f64]);
}

impl<D: DriftProvider + ?Sized> DriftProvider for &D {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn n_inputs(&self) -> usize {
        (**self).n_inputs()
    }
    fn log_prior(&self, theta: &[f64]) -> f64 {
        (**self).log_prior(theta)
    }
    fn prior_grad(&self, theta: &[f64], out: &mut [f64]) {
        (**self).prior_grad(theta, out)
    }
    fn log_likelihood(&self, theta: &[f64], data: DataSel) -> f64 {
        (**self).log_likelihood(theta, data)
    }
    fn likelihood_grad(&self, theta: &[f64], data: DataSel, out: &mut [f64]) {
        (**self).likelihood_grad(theta, data, out)
    }
}

/// A model with per-input hidden state `zⁿ ~ p_N(z | xⁿ, θ)`.
///
/// Each update first draws `zⁿ` at the current parameters and then follows
/// the gradient of `log p_N(xⁿ, zⁿ | θ)`.
pub trait LatentDrift {
    type Latent;

    fn dim(&self) -> usize;
    fn n_inputs(&self) -> usize;
    fn log_prior(&self, theta: &[f64]) -> f64;
    fn prior_grad(&self, theta: &[f64], out: &mut [f64]);
    fn sample_latent(&self, theta: &[f64], input: usize, rng: &mut ChainRng) -> Self::Latent;
    fn joint_likelihood_grad(&self, theta: &[f64], input: usize, latent: &Self::Latent, out: &mut [f64]);
}

/// Lifts a fully observed model into a [`LatentDrift`] whose hidden state has
/// a single admissible value.
#[derive(Clone, Debug)]
pub struct Observed<D>(pub D);

impl<D: DriftProvider> LatentDrift for Observed<D> {
    type Latent = ();

    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn n_inputs(&self) -> usize {
        self.0.n_inputs()
    }
    fn log_prior(&self, theta: &[f64]) -> f64 {
        self.0.log_prior(theta)
    }
    fn prior_grad(&self, theta: &[f64], out: &mut [f64]) {
        self.0.prior_grad(theta, out)
    }
    fn sample_latent(&self, _theta: &[f64], _input: usize, _rng: &mut ChainRng) {}
    fn joint_likelihood_grad(&self, theta: &[f64], input: usize, _latent: &(), out: &mut [f64]) {
        self.0.likelihood_grad(theta, DataSel::Input(input), out)
    }
}
