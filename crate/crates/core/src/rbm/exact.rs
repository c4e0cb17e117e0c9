//! Exact enumeration oracles for tiny machines.

use alloc::vec::Vec;

use super::{BinaryPattern, RbmGradient, RbmParams};
use crate::error::{ensure, Error, Result};
use crate::langevin::{DataSel, DriftProvider};
use crate::math;
use crate::priors::{Prior, PriorSpec};

/// Largest `n_visible + n_hidden` accepted by the enumeration oracles.
pub const MAX_ENUMERATION_UNITS: usize = 24;

fn guard(params: &RbmParams) -> Result<()> {
    let units = params.n_visible() + params.n_hidden();
    if units > MAX_ENUMERATION_UNITS {
        return Err(Error::Capability(alloc::format!(
            "exact enumeration limited to {MAX_ENUMERATION_UNITS} units, machine has {units}"
        )));
    }
    Ok(())
}

fn check_data(params: &RbmParams, data: &[BinaryPattern]) -> Result<()> {
    ensure!(!data.is_empty(), "empty data set");
    for (n, x) in data.iter().enumerate() {
        ensure!(x.len() == params.n_visible(), "pattern {n} has {} bits, expected {}", x.len(), params.n_visible());
    }
    Ok(())
}

/// `log Σ_z exp(−E(x, z))`
fn log_marginal_visible(p: &RbmParams, x: &[u8]) -> f64 {
    let mut s: f64 = p.bias_visible.iter().zip(x).filter(|(_, &b)| b != 0).map(|(v, _)| v).sum();
    for i in 0..p.n_hidden() {
        s += math::softplus(p.hidden_input(x, i));
    }
    s
}

/// `log Σ_x exp(−E(x, z))`
fn log_marginal_hidden(p: &RbmParams, z: &[u8]) -> f64 {
    let mut s: f64 = p.bias_hidden.iter().zip(z).filter(|(_, &b)| b != 0).map(|(v, _)| v).sum();
    for j in 0..p.n_visible() {
        s += math::softplus(p.visible_input(z, j));
    }
    s
}

fn states(n: usize) -> impl Iterator<Item = BinaryPattern> {
    (0..1u64 << n).map(move |c| BinaryPattern::from_index(c, n))
}

fn enumerate_visible(p: &RbmParams) -> bool {
    p.n_visible() <= p.n_hidden()
}

fn log_partition(p: &RbmParams) -> f64 {
    let terms: Vec<f64> = if enumerate_visible(p) {
        states(p.n_visible()).map(|x| log_marginal_visible(p, &x.bits)).collect()
    } else {
        states(p.n_hidden()).map(|z| log_marginal_hidden(p, &z.bits)).collect()
    };
    math::log_sum_exp(&terms)
}

fn log_prob(p: &RbmParams, x: &[u8], log_z: f64) -> f64 {
    log_marginal_visible(p, x) - log_z
}

/// `p(x)` for every visible state, indexed as in [`BinaryPattern::from_index`].
pub fn visible_distribution(params: &RbmParams) -> Result<Vec<f64>> {
    guard(params)?;
    let log_z = log_partition(params);
    Ok(states(params.n_visible()).map(|x| math::exp(log_prob(params, &x.bits, log_z))).collect())
}

/// Average `log p(x)` over `data`.
pub fn exact_log_likelihood(params: &RbmParams, data: &[BinaryPattern]) -> Result<f64> {
    guard(params)?;
    check_data(params, data)?;
    let log_z = log_partition(params);
    Ok(data.iter().map(|x| log_prob(params, &x.bits, log_z)).sum::<f64>() / data.len() as f64)
}

fn add_clamped(p: &RbmParams, x: &[u8], weight: f64, g: &mut RbmGradient) {
    for i in 0..p.n_hidden() {
        let zi = weight * math::logistic(p.hidden_input(x, i));
        g.bias_hidden[i] += zi;
        let row = g.weights.row_mut(i);
        for (r, &b) in row.iter_mut().zip(x) {
            if b != 0 {
                *r += zi;
            }
        }
    }
    for (v, &b) in g.bias_visible.iter_mut().zip(x) {
        if b != 0 {
            *v += weight;
        }
    }
}

fn model_expectation(p: &RbmParams) -> RbmGradient {
    let (nv, nh) = (p.n_visible(), p.n_hidden());
    let log_z = log_partition(p);
    let mut g = RbmGradient::zeros(nv, nh);
    if enumerate_visible(p) {
        for x in states(nv) {
            let w = math::exp(log_prob(p, &x.bits, log_z));
            add_clamped(p, &x.bits, w, &mut g);
        }
    } else {
        for z in states(nh) {
            let w = math::exp(log_marginal_hidden(p, &z.bits) - log_z);
            let xbar: Vec<f64> = (0..nv).map(|j| math::logistic(p.visible_input(&z.bits, j))).collect();
            for i in 0..nh {
                if z.bits[i] == 0 {
                    continue;
                }
                g.bias_hidden[i] += w;
                for (r, xb) in g.weights.row_mut(i).iter_mut().zip(&xbar) {
                    *r += w * xb;
                }
            }
            for (v, xb) in g.bias_visible.iter_mut().zip(&xbar) {
                *v += w * xb;
            }
        }
    }
    g
}

fn grad_unchecked(p: &RbmParams, data: &[BinaryPattern], model: &RbmGradient) -> RbmGradient {
    let mut g = RbmGradient::zeros(p.n_visible(), p.n_hidden());
    let w = 1.0 / data.len() as f64;
    for x in data {
        add_clamped(p, &x.bits, w, &mut g);
    }
    for (a, b) in g.weights.as_mut_slice().iter_mut().zip(model.weights.as_slice()) {
        *a -= b;
    }
    for (a, b) in g.bias_hidden.iter_mut().zip(&model.bias_hidden) {
        *a -= b;
    }
    for (a, b) in g.bias_visible.iter_mut().zip(&model.bias_visible) {
        *a -= b;
    }
    g
}

/// Gradient of [`exact_log_likelihood`] in all parameters.
pub fn exact_log_likelihood_grad(params: &RbmParams, data: &[BinaryPattern]) -> Result<RbmGradient> {
    guard(params)?;
    check_data(params, data)?;
    Ok(grad_unchecked(params, data, &model_expectation(params)))
}

/// A tiny machine as a [`DriftProvider`] over the flattened parameters
/// (see [`RbmParams::to_flat`]); the prior acts on weights only.
#[derive(Clone, Debug)]
pub struct ExactRbmModel {
    pub n_visible: usize,
    pub n_hidden: usize,
    pub data: Vec<BinaryPattern>,
    weight_prior: Prior,
}

impl ExactRbmModel {
    pub fn new(n_visible: usize, n_hidden: usize, data: Vec<BinaryPattern>, weight_prior: &PriorSpec) -> Result<Self> {
        let probe = RbmParams::zeros(n_visible, n_hidden);
        guard(&probe)?;
        check_data(&probe, &data)?;
        Ok(Self { n_visible, n_hidden, data, weight_prior: weight_prior.validate()? })
    }

    fn params(&self, theta: &[f64]) -> RbmParams {
        let nw = self.n_visible * self.n_hidden;
        let mut p = RbmParams::zeros(self.n_visible, self.n_hidden);
        p.weights.as_mut_slice().copy_from_slice(&theta[..nw]);
        p.bias_hidden.copy_from_slice(&theta[nw..nw + self.n_hidden]);
        p.bias_visible.copy_from_slice(&theta[nw + self.n_hidden..]);
        p
    }

    fn selected(&self, data: DataSel) -> &[BinaryPattern] {
        match data {
            DataSel::All => &self.data,
            DataSel::Input(n) => core::slice::from_ref(&self.data[n]),
        }
    }
}

impl DriftProvider for ExactRbmModel {
    fn dim(&self) -> usize {
        self.n_visible * self.n_hidden + self.n_visible + self.n_hidden
    }
    fn n_inputs(&self) -> usize {
        self.data.len()
    }
    fn log_prior(&self, theta: &[f64]) -> f64 {
        theta[..self.n_visible * self.n_hidden].iter().map(|&w| self.weight_prior.log_density(w)).sum()
    }
    fn prior_grad(&self, theta: &[f64], out: &mut [f64]) {
        let nw = self.n_visible * self.n_hidden;
        for (o, &w) in out[..nw].iter_mut().zip(&theta[..nw]) {
            *o = self.weight_prior.grad(w);
        }
        out[nw..].fill(0.0);
    }
    fn log_likelihood(&self, theta: &[f64], data: DataSel) -> f64 {
        let p = self.params(theta);
        let log_z = log_partition(&p);
        self.selected(data).iter().map(|x| log_prob(&p, &x.bits, log_z)).sum()
    }
    fn likelihood_grad(&self, theta: &[f64], data: DataSel, out: &mut [f64]) {
        let p = self.params(theta);
        let sel = self.selected(data);
        let g = grad_unchecked(&p, sel, &model_expectation(&p));
        let scale = sel.len() as f64;
        for (o, v) in out.iter_mut().zip(g.to_flat()) {
            *o = scale * v;
        }
    }
}
