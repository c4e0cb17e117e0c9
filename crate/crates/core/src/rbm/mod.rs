//! Binary restricted Boltzmann machine with energy
//! `E(x, z) = −zᵀWx − b_hidᵀz − b_visᵀx`.

mod exact;

use alloc::vec;
use alloc::vec::Vec;

pub use exact::{
    exact_log_likelihood, exact_log_likelihood_grad, visible_distribution, ExactRbmModel, MAX_ENUMERATION_UNITS,
};

use crate::error::{ensure, Error, Result};
use crate::langevin::SamplerConfig;
use crate::linalg::Matrix;
use crate::math;
use crate::priors::Prior;
use crate::rng::ChainRng;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RbmParams {
    /// `n_hidden × n_visible`
    pub weights: Matrix,
    pub bias_hidden: Vec<f64>,
    pub bias_visible: Vec<f64>,
}

/// Bits in `{0, 1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BinaryPattern {
    pub bits: Vec<u8>,
}

impl BinaryPattern {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(i) = bits.iter().position(|&b| b > 1) {
            return Err(Error::Argument(alloc::format!("bit {i} is {} (expected 0 or 1)", bits[i])));
        }
        Ok(Self { bits })
    }

    pub fn zeros(n: usize) -> Self {
        Self { bits: vec![0; n] }
    }

    /// The `n`-bit pattern of integer `code`, least significant bit first.
    pub fn from_index(code: u64, n: usize) -> Self {
        Self { bits: (0..n).map(|j| ((code >> j) & 1) as u8).collect() }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// Source of Bernoulli draws for stochastic units.
pub trait BinarySampler {
    fn bernoulli(&mut self, p: f64) -> u8;
}

impl BinarySampler for ChainRng {
    #[inline]
    fn bernoulli(&mut self, p: f64) -> u8 {
        (self.uniform() < p) as u8
    }
}

/// Deterministic unit update `p ≥ 0.5 → 1`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ThresholdSampler;

impl BinarySampler for ThresholdSampler {
    fn bernoulli(&mut self, p: f64) -> u8 {
        (p >= 0.5) as u8
    }
}

/// A wake/reconstruction pass.
#[derive(Clone, Debug, PartialEq)]
pub struct CdSample {
    pub x: BinaryPattern,
    pub z: BinaryPattern,
    pub x_hat: BinaryPattern,
    pub z_hat: BinaryPattern,
}

/// Likelihood-gradient estimate (or exact gradient) in all parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct RbmGradient {
    pub weights: Matrix,
    pub bias_hidden: Vec<f64>,
    pub bias_visible: Vec<f64>,
}

impl RbmGradient {
    pub fn zeros(n_visible: usize, n_hidden: usize) -> Self {
        Self { weights: Matrix::zeros(n_hidden, n_visible), bias_hidden: vec![0.0; n_hidden], bias_visible: vec![0.0; n_visible] }
    }

    /// Flattened in the order of [`RbmParams::to_flat`].
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.weights.as_slice().to_vec();
        v.extend_from_slice(&self.bias_hidden);
        v.extend_from_slice(&self.bias_visible);
        v
    }
}

impl CdSample {
    pub fn gradient(&self) -> RbmGradient {
        let (nv, nh) = (self.x.len(), self.z.len());
        let mut g = RbmGradient::zeros(nv, nh);
        for i in 0..nh {
            let (zi, zh) = (self.z.bits[i] as f64, self.z_hat.bits[i] as f64);
            let row = g.weights.row_mut(i);
            for j in 0..nv {
                row[j] = zi * self.x.bits[j] as f64 - zh * self.x_hat.bits[j] as f64;
            }
            g.bias_hidden[i] = zi - zh;
        }
        for j in 0..nv {
            g.bias_visible[j] = self.x.bits[j] as f64 - self.x_hat.bits[j] as f64;
        }
        g
    }
}

/// How gray levels are clamped onto visible units.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ClampMode {
    /// Unit is 1 with probability `g/255`.
    #[default]
    Stochastic,
    /// Unit is 1 iff `g ≥ 128`.
    Threshold,
}

pub fn clamp_visible(gray: &[u8], mode: ClampMode, rng: &mut ChainRng) -> BinaryPattern {
    let bits = gray
        .iter()
        .map(|&g| match mode {
            ClampMode::Stochastic => rng.bernoulli(g as f64 / 255.0),
            ClampMode::Threshold => (g >= 128) as u8,
        })
        .collect();
    BinaryPattern { bits }
}

impl RbmParams {
    pub fn zeros(n_visible: usize, n_hidden: usize) -> Self {
        Self { weights: Matrix::zeros(n_hidden, n_visible), bias_hidden: vec![0.0; n_hidden], bias_visible: vec![0.0; n_visible] }
    }

    pub fn n_visible(&self) -> usize {
        self.weights.cols()
    }

    pub fn n_hidden(&self) -> usize {
        self.weights.rows()
    }

    pub fn n_params(&self) -> usize {
        self.n_visible() * self.n_hidden() + self.n_visible() + self.n_hidden()
    }

    /// Weights row-major, then hidden biases, then visible biases.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.weights.as_slice().to_vec();
        v.extend_from_slice(&self.bias_hidden);
        v.extend_from_slice(&self.bias_visible);
        v
    }

    pub fn from_flat(n_visible: usize, n_hidden: usize, flat: &[f64]) -> Result<Self> {
        let nw = n_visible * n_hidden;
        ensure!(flat.len() == nw + n_visible + n_hidden, "flat vector has wrong length {}", flat.len());
        Ok(Self {
            weights: Matrix::from_row_major(n_hidden, n_visible, flat[..nw].to_vec())?,
            bias_hidden: flat[nw..nw + n_hidden].to_vec(),
            bias_visible: flat[nw + n_hidden..].to_vec(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.bias_hidden.len() == self.n_hidden(), "hidden bias length mismatch");
        ensure!(self.bias_visible.len() == self.n_visible(), "visible bias length mismatch");
        let flat = self.to_flat();
        if let Some(i) = flat.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric { index: i, what: "rbm parameter" });
        }
        Ok(())
    }

    fn check_visible(&self, x: &[u8]) -> Result<()> {
        ensure!(x.len() == self.n_visible(), "visible pattern has {} bits, expected {}", x.len(), self.n_visible());
        Ok(())
    }

    fn check_hidden(&self, z: &[u8]) -> Result<()> {
        ensure!(z.len() == self.n_hidden(), "hidden pattern has {} bits, expected {}", z.len(), self.n_hidden());
        Ok(())
    }

    pub(crate) fn hidden_input(&self, x: &[u8], i: usize) -> f64 {
        let row = self.weights.row(i);
        let mut s = self.bias_hidden[i];
        for (w, &b) in row.iter().zip(x) {
            if b != 0 {
                s += w;
            }
        }
        s
    }

    pub(crate) fn visible_input(&self, z: &[u8], j: usize) -> f64 {
        let mut s = self.bias_visible[j];
        for (i, &b) in z.iter().enumerate() {
            if b != 0 {
                s += self.weights.get(i, j);
            }
        }
        s
    }
}

/// `pᵢ = σ(Σⱼ wᵢⱼ xⱼ + bᵢ^hid)`
pub fn hidden_activation_prob(params: &RbmParams, x: &[u8]) -> Result<Vec<f64>> {
    params.check_visible(x)?;
    Ok((0..params.n_hidden()).map(|i| math::logistic(params.hidden_input(x, i))).collect())
}

/// `pⱼ = σ(Σᵢ wᵢⱼ zᵢ + bⱼ^vis)`
pub fn visible_activation_prob(params: &RbmParams, z: &[u8]) -> Result<Vec<f64>> {
    params.check_hidden(z)?;
    Ok((0..params.n_visible()).map(|j| math::logistic(params.visible_input(z, j))).collect())
}

fn sample_hidden_into<S: BinarySampler>(params: &RbmParams, x: &[u8], s: &mut S, out: &mut [u8]) {
    for (i, o) in out.iter_mut().enumerate() {
        *o = s.bernoulli(math::logistic(params.hidden_input(x, i)));
    }
}

fn sample_visible_into<S: BinarySampler>(params: &RbmParams, z: &[u8], s: &mut S, out: &mut [u8]) {
    for (j, o) in out.iter_mut().enumerate() {
        *o = s.bernoulli(math::logistic(params.visible_input(z, j)));
    }
}

pub fn sample_hidden<S: BinarySampler>(params: &RbmParams, x: &[u8], sampler: &mut S) -> Result<BinaryPattern> {
    params.check_visible(x)?;
    let mut z = vec![0; params.n_hidden()];
    sample_hidden_into(params, x, sampler, &mut z);
    Ok(BinaryPattern { bits: z })
}

pub fn sample_visible<S: BinarySampler>(params: &RbmParams, z: &[u8], sampler: &mut S) -> Result<BinaryPattern> {
    params.check_hidden(z)?;
    let mut x = vec![0; params.n_visible()];
    sample_visible_into(params, z, sampler, &mut x);
    Ok(BinaryPattern { bits: x })
}

/// Wake phase on clamped `x`, then `k` alternating visible→hidden cycles
/// starting from the wake hidden state.
pub fn cd_sample<S: BinarySampler>(params: &RbmParams, x: &BinaryPattern, k: usize, sampler: &mut S) -> Result<CdSample> {
    ensure!(k >= 1, "contrastive divergence needs k >= 1");
    params.check_visible(&x.bits)?;
    let mut z = vec![0; params.n_hidden()];
    sample_hidden_into(params, &x.bits, sampler, &mut z);
    let mut xh = vec![0; params.n_visible()];
    let mut zh = z.clone();
    for _ in 0..k {
        sample_visible_into(params, &zh, sampler, &mut xh);
        sample_hidden_into(params, &xh, sampler, &mut zh);
    }
    Ok(CdSample {
        x: x.clone(),
        z: BinaryPattern { bits: z },
        x_hat: BinaryPattern { bits: xh },
        z_hat: BinaryPattern { bits: zh },
    })
}

/// CD-k estimate `zᵢxⱼ − ẑᵢx̂ⱼ` and the bias analogues.
pub fn cd_gradient<S: BinarySampler>(params: &RbmParams, x: &BinaryPattern, k: usize, sampler: &mut S) -> Result<RbmGradient> {
    Ok(cd_sample(params, x, k, sampler)?.gradient())
}

/// Weights: `η(∂ log p_S(w) + N·CD) + √(2ηT)ν`; biases the same without a
/// prior term. `η = b·Δt`, `N = cfg.dataset_size`, `T = cfg.temperature`.
/// Unit states are drawn from `sampler`, parameter noise from `rng`.
pub fn sampling_update_with<S: BinarySampler>(
    params: &mut RbmParams,
    x: &BinaryPattern,
    weight_prior: &Prior,
    cfg: &SamplerConfig,
    k: usize,
    sampler: &mut S,
    rng: &mut ChainRng,
) -> Result<()> {
    cfg.validate()?;
    let g = cd_gradient(params, x, k, sampler)?;
    apply_gradient_step(params, &g, weight_prior, cfg, rng)
}

/// [`sampling_update_with`] drawing units and noise from one stream.
pub fn sampling_update(
    params: &mut RbmParams,
    x: &BinaryPattern,
    weight_prior: &Prior,
    cfg: &SamplerConfig,
    k: usize,
    rng: &mut ChainRng,
) -> Result<()> {
    cfg.validate()?;
    let g = cd_gradient(params, x, k, rng)?;
    apply_gradient_step(params, &g, weight_prior, cfg, rng)
}

/// The parameter step for a given likelihood-gradient estimate `g`.
pub fn apply_gradient_step(
    params: &mut RbmParams,
    g: &RbmGradient,
    weight_prior: &Prior,
    cfg: &SamplerConfig,
    rng: &mut ChainRng,
) -> Result<()> {
    let eta = cfg.eta();
    let n = cfg.dataset_size as f64;
    let noise = math::sqrt(2.0 * eta * cfg.temperature);
    let draw = |rng: &mut ChainRng| if noise > 0.0 { noise * rng.normal() } else { 0.0 };
    let nv = params.n_visible();
    ensure!(g.weights.cols() == nv && g.weights.rows() == params.n_hidden(), "gradient shape mismatch");
    for i in 0..params.n_hidden() {
        let grow = g.weights.row(i);
        let row = params.weights.row_mut(i);
        for j in 0..nv {
            let w = row[j];
            row[j] = w + eta * (weight_prior.grad(w) + n * grow[j]) + draw(rng);
        }
    }
    for (b, d) in params.bias_hidden.iter_mut().zip(&g.bias_hidden) {
        *b += eta * n * d + draw(rng);
    }
    for (b, d) in params.bias_visible.iter_mut().zip(&g.bias_visible) {
        *b += eta * n * d + draw(rng);
    }
    params.validate()
}

/// Weights `N(0, 0.25²)`, both bias vectors `N(−1, 0.25²)`.
pub fn init_params(n_visible: usize, n_hidden: usize, rng: &mut ChainRng) -> Result<RbmParams> {
    ensure!(n_visible >= 1 && n_hidden >= 1, "layer sizes must be >= 1");
    let mut p = RbmParams::zeros(n_visible, n_hidden);
    for w in p.weights.as_mut_slice() {
        *w = 0.25 * rng.normal();
    }
    for b in p.bias_hidden.iter_mut().chain(p.bias_visible.iter_mut()) {
        *b = -1.0 + 0.25 * rng.normal();
    }
    Ok(p)
}

/// Mean cross-entropy between `x` and its one-step mean-field
/// reconstruction; a likelihood proxy for nets too large to enumerate.
pub fn reconstruction_cross_entropy(params: &RbmParams, data: &[BinaryPattern]) -> Result<f64> {
    ensure!(!data.is_empty(), "empty data set");
    let mut total = 0.0;
    for x in data {
        let ph = hidden_activation_prob(params, &x.bits)?;
        for j in 0..params.n_visible() {
            let a = params.bias_visible[j] + (0..params.n_hidden()).map(|i| params.weights.get(i, j) * ph[i]).sum::<f64>();
            // −log σ(a) = softplus(−a), −log(1 − σ(a)) = softplus(a)
            total += if x.bits[j] == 1 { math::softplus(-a) } else { math::softplus(a) };
        }
    }
    Ok(total / data.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::priors::PriorSpec;

    #[test]
    fn zero_params_give_half_probabilities() {
        let p = RbmParams::zeros(5, 3);
        assert!(hidden_activation_prob(&p, &[1, 0, 1, 1, 0]).unwrap().iter().all(|&q| q == 0.5));
        assert!(visible_activation_prob(&p, &[1, 1, 0]).unwrap().iter().all(|&q| q == 0.5));
    }

    #[test]
    fn single_unit_cancellation() {
        let mut p = RbmParams::zeros(1, 1);
        *p.weights.get_mut(0, 0) = 1.0;
        p.bias_hidden[0] = -1.0;
        assert_eq!(hidden_activation_prob(&p, &[1]).unwrap(), vec![0.5]);
    }

    #[test]
    fn activation_matches_direct_formula() {
        let mut rng = ChainRng::seed_from_u64(1);
        let p = init_params(7, 4, &mut rng).unwrap();
        let x = [1u8, 0, 1, 1, 0, 0, 1];
        let got = hidden_activation_prob(&p, &x).unwrap();
        for i in 0..4 {
            let a: f64 = (0..7).map(|j| p.weights.get(i, j) * x[j] as f64).sum::<f64>() + p.bias_hidden[i];
            assert!((got[i] - 1.0 / (1.0 + (-a).exp())).abs() < 1e-12);
        }
    }

    #[test]
    fn shape_mismatch_is_an_argument_error() {
        let p = RbmParams::zeros(3, 2);
        assert!(matches!(hidden_activation_prob(&p, &[1, 0]), Err(Error::Argument(_))));
        assert!(matches!(visible_activation_prob(&p, &[1, 0, 1]), Err(Error::Argument(_))));
        let x = BinaryPattern::zeros(4);
        assert!(cd_gradient(&p, &x, 5, &mut ThresholdSampler).is_err());
        assert!(BinaryPattern::new(vec![0, 2]).is_err());
    }

    #[test]
    fn wake_equal_to_reconstruction_gives_zero_gradient() {
        // strong weights make (x, z) a fixed point of the threshold dynamics
        let mut p = RbmParams::zeros(4, 2);
        let x = BinaryPattern::new(vec![1, 0, 1, 0]).unwrap();
        for j in 0..4 {
            let s = if x.bits[j] == 1 { 4.0 } else { -4.0 };
            *p.weights.get_mut(0, j) = s;
            *p.weights.get_mut(1, j) = -s;
        }
        let c = cd_sample(&p, &x, 5, &mut ThresholdSampler).unwrap();
        assert_eq!(c.x_hat, c.x);
        assert_eq!(c.z_hat, c.z);
        assert!(c.gradient().to_flat().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn init_statistics_and_determinism() {
        let a = init_params(784, 9, &mut ChainRng::seed_from_u64(4)).unwrap();
        assert_eq!((a.n_hidden(), a.n_visible()), (9, 784));
        let b = init_params(784, 9, &mut ChainRng::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);
        let big = init_params(1000, 100, &mut ChainRng::seed_from_u64(5)).unwrap();
        let w = big.weights.as_slice();
        assert!(math::mean(w).abs() < 0.01);
        assert!((math::variance(w).sqrt() - 0.25).abs() < 0.01);
        assert!((math::mean(&big.bias_visible) + 1.0).abs() < 0.05);
    }

    #[test]
    fn zero_eta_leaves_params_unchanged() {
        let mut rng = ChainRng::seed_from_u64(2);
        let p0 = init_params(6, 3, &mut rng).unwrap();
        let mut p = p0.clone();
        // b·Δt underflows to exactly 0
        let cfg = SamplerConfig { learning_rate_b: 1e-300, dt: 1e-300, dataset_size: 100, ..Default::default() };
        let x = BinaryPattern::new(vec![1, 0, 1, 0, 1, 1]).unwrap();
        let prior = PriorSpec::RBM_BIMODAL.validate().unwrap();
        sampling_update(&mut p, &x, &prior, &cfg, 5, &mut rng).unwrap();
        assert_eq!(p, p0);
    }

    #[test]
    fn noiseless_uniform_prior_is_plain_cd() {
        let mut rng = ChainRng::seed_from_u64(3);
        let p0 = init_params(6, 3, &mut rng).unwrap();
        let x = BinaryPattern::new(vec![1, 1, 0, 0, 1, 0]).unwrap();
        let cfg = SamplerConfig { learning_rate_b: 1e-3, dt: 0.1, dataset_size: 100, temperature: 0.0, ..Default::default() };
        let prior = PriorSpec::UNIFORM.validate().unwrap();
        let mut p = p0.clone();
        let mut units = ChainRng::seed_from_u64(9);
        sampling_update_with(&mut p, &x, &prior, &cfg, 5, &mut units, &mut rng).unwrap();
        let g = cd_gradient(&p0, &x, 5, &mut ChainRng::seed_from_u64(9)).unwrap();
        for ((a, b), d) in p.to_flat().iter().zip(p0.to_flat()).zip(g.to_flat()) {
            assert!((a - b - 1e-4 * 100.0 * d).abs() < 1e-15);
        }
    }

    #[test]
    fn flat_round_trip() {
        let p = init_params(5, 2, &mut ChainRng::seed_from_u64(6)).unwrap();
        assert_eq!(RbmParams::from_flat(5, 2, &p.to_flat()).unwrap(), p);
    }

    #[test]
    fn clamping_modes() {
        let mut rng = ChainRng::seed_from_u64(1);
        let t = clamp_visible(&[0, 127, 128, 255], ClampMode::Threshold, &mut rng);
        assert_eq!(t.bits, vec![0, 0, 1, 1]);
        let n = 20_000;
        let ones: usize = (0..n).map(|_| clamp_visible(&[64], ClampMode::Stochastic, &mut rng).bits[0] as usize).sum();
        assert!((ones as f64 / n as f64 - 64.0 / 255.0).abs() < 0.015);
    }

    #[test]
    fn hidden_units_are_conditionally_independent() {
        let mut rng = ChainRng::seed_from_u64(8);
        let p = init_params(6, 3, &mut rng).unwrap();
        let x = [1u8, 0, 1, 1, 0, 1];
        let n = 100_000;
        let (mut s0, mut s1, mut s01) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let z = sample_hidden(&p, &x, &mut rng).unwrap();
            let (a, b) = (z.bits[0] as f64, z.bits[1] as f64);
            s0 += a;
            s1 += b;
            s01 += a * b;
        }
        let nf = n as f64;
        let (m0, m1) = (s0 / nf, s1 / nf);
        let rho = (s01 / nf - m0 * m1) / (m0 * (1.0 - m0) * m1 * (1.0 - m1)).sqrt();
        assert!(rho.abs() < 0.02, "{rho}");
    }
}
