use alloc::vec;
use alloc::vec::Vec;

use super::kernel::DoubleExp;
use crate::error::{ensure, Error, Result};
use crate::math;
use crate::priors::PriorSpec;
use crate::rng::ChainRng;

/// Neuron and synapse constants. Times in ms, rates in Hz.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WtaParams {
    pub dt_ms: f64,
    pub rho_net_hz: f64,
    pub epsp: DoubleExp,
    pub adaptation: DoubleExp,
    pub gamma: f64,
    pub theta0: f64,
    pub alpha: f64,
    /// Delay of synapses whose source is a network neuron.
    pub lateral_delay_ms: f64,
}

impl Default for WtaParams {
    fn default() -> Self {
        Self {
            dt_ms: 1.0,
            rho_net_hz: 100.0,
            epsp: DoubleExp::EPSP,
            adaptation: DoubleExp::ADAPTATION,
            gamma: -8.0,
            theta0: 3.0,
            alpha: math::exp(-2.0),
            lateral_delay_ms: 5.0,
        }
    }
}

impl WtaParams {
    pub fn validate(&self) -> Result<()> {
        ensure!(self.dt_ms > 0.0, "dt_ms must be > 0");
        ensure!(self.rho_net_hz > 0.0, "rho_net_hz must be > 0");
        ensure!(self.alpha > 0.0, "alpha must be > 0");
        self.epsp.validate()?;
        self.adaptation.validate()?;
        ensure!(
            self.lateral_delay_ms >= self.dt_ms,
            "lateral delay ({} ms) must be at least one step ({} ms)",
            self.lateral_delay_ms,
            self.dt_ms
        );
        Ok(())
    }

    pub fn delay_steps(&self) -> usize {
        libm::round(self.lateral_delay_ms / self.dt_ms) as usize
    }
}

/// All potential synapses from a contiguous source range onto a contiguous
/// range of network neurons. Sources `0..n_inputs` are input neurons,
/// `n_inputs + k` is network neuron `k`. Self-connections are skipped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Projection {
    pub source_start: usize,
    pub source_end: usize,
    pub target_start: usize,
    pub target_end: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Topology {
    pub n_inputs: usize,
    /// Size of each WTA circuit; network neurons are numbered circuit by circuit.
    pub circuits: Vec<usize>,
    pub projections: Vec<Projection>,
}

impl Topology {
    /// `n_inputs` inputs fully connected to one circuit of `k` neurons.
    pub fn single_circuit(n_inputs: usize, k: usize) -> Self {
        Self {
            n_inputs,
            circuits: vec![k],
            projections: vec![Projection { source_start: 0, source_end: n_inputs, target_start: 0, target_end: k }],
        }
    }

    pub fn n_hidden(&self) -> usize {
        self.circuits.iter().sum()
    }

    pub fn n_sources(&self) -> usize {
        self.n_inputs + self.n_hidden()
    }

    fn validate(&self) -> Result<()> {
        ensure!(!self.circuits.is_empty() && self.circuits.iter().all(|&c| c >= 1), "every circuit needs >= 1 neuron");
        let (ns, nh) = (self.n_sources(), self.n_hidden());
        for p in &self.projections {
            ensure!(p.source_start < p.source_end && p.source_end <= ns, "projection source range out of bounds");
            ensure!(p.target_start < p.target_end && p.target_end <= nh, "projection target range out of bounds");
        }
        for k in 0..nh {
            let mut ranges: Vec<(usize, usize)> = self
                .projections
                .iter()
                .filter(|p| (p.target_start..p.target_end).contains(&k))
                .map(|p| (p.source_start, p.source_end))
                .collect();
            ranges.sort_unstable();
            ensure!(
                ranges.windows(2).all(|w| w[0].1 <= w[1].0),
                "overlapping projections onto neuron {k} would duplicate a (pre, post) pair"
            );
        }
        Ok(())
    }
}

/// Contiguous run of synapses of one post neuron from consecutive sources.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Block {
    pub source_start: u32,
    pub len: u32,
    pub syn_start: u32,
}

pub const BANNED: u8 = 1;
pub const REMOVED: u8 = 2;

/// Read-only view of one synapse.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynapseRecord {
    pub id: usize,
    /// Source id (input `i` or `n_inputs + k`).
    pub pre: usize,
    pub post: usize,
    pub theta: f64,
    pub w: f64,
    pub w_hat: f64,
    pub functional: bool,
    pub delay_ms: f64,
    pub regrowth_banned: bool,
    pub removed: bool,
}

/// `w = exp(θ − θ₀)`
#[inline]
pub fn efficacy(theta: f64, theta0: f64) -> f64 {
    math::exp(theta - theta0)
}

/// `ŵ = max{0, w − exp(−θ₀)}`
#[inline]
pub fn effective_weight(theta: f64, theta0: f64) -> f64 {
    if theta <= 0.0 {
        0.0
    } else {
        (math::exp(theta - theta0) - math::exp(-theta0)).max(0.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WtaNetwork {
    pub params: WtaParams,
    topology: Topology,
    circuit_of: Vec<u32>,
    circuit_members: Vec<Vec<u32>>,
    alive: Vec<bool>,
    pub(crate) theta: Vec<f64>,
    pub(crate) w_hat: Vec<f64>,
    pub(crate) status: Vec<u8>,
    pre: Vec<u32>,
    post: Vec<u32>,
    post_offsets: Vec<usize>,
    pub(crate) blocks: Vec<Block>,
    pub(crate) block_offsets: Vec<usize>,
}

impl WtaNetwork {
    /// Instantiates every potential synapse with `θ` drawn from `prior`.
    pub fn new(params: WtaParams, topology: Topology, prior: &PriorSpec, rng: &mut ChainRng) -> Result<Self> {
        params.validate()?;
        topology.validate()?;
        let prior = prior.validate()?;
        let nh = topology.n_hidden();
        let mut circuit_of = Vec::with_capacity(nh);
        let mut circuit_members = Vec::with_capacity(topology.circuits.len());
        for (c, &size) in topology.circuits.iter().enumerate() {
            let start = circuit_of.len() as u32;
            circuit_members.push((start..start + size as u32).collect());
            circuit_of.extend(core::iter::repeat(c as u32).take(size));
        }
        let mut blocks = Vec::new();
        let mut block_offsets = vec![0];
        let mut post_offsets = vec![0];
        let mut pre = Vec::new();
        let mut post = Vec::new();
        for k in 0..nh {
            let mut ranges: Vec<(usize, usize)> = topology
                .projections
                .iter()
                .filter(|p| (p.target_start..p.target_end).contains(&k))
                .map(|p| (p.source_start, p.source_end))
                .collect();
            ranges.sort_unstable();
            let own = topology.n_inputs + k;
            for (a, b) in ranges {
                let pieces = if (a..b).contains(&own) { [(a, own), (own + 1, b)] } else { [(a, b), (b, b)] };
                for (s, e) in pieces {
                    if s >= e {
                        continue;
                    }
                    blocks.push(Block { source_start: s as u32, len: (e - s) as u32, syn_start: pre.len() as u32 });
                    for src in s..e {
                        pre.push(src as u32);
                        post.push(k as u32);
                    }
                }
            }
            block_offsets.push(blocks.len());
            post_offsets.push(pre.len());
        }
        let n_syn = pre.len();
        let mut theta = Vec::with_capacity(n_syn);
        for _ in 0..n_syn {
            theta.push(prior.sample(rng)?);
        }
        let w_hat = theta.iter().map(|&t| effective_weight(t, params.theta0)).collect();
        Ok(Self {
            params,
            topology,
            circuit_of,
            circuit_members,
            alive: vec![true; nh],
            theta,
            w_hat,
            status: vec![0; n_syn],
            pre,
            post,
            post_offsets,
            blocks,
            block_offsets,
        })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn n_inputs(&self) -> usize {
        self.topology.n_inputs
    }

    pub fn n_hidden(&self) -> usize {
        self.circuit_of.len()
    }

    pub fn n_sources(&self) -> usize {
        self.topology.n_sources()
    }

    pub fn n_synapses(&self) -> usize {
        self.theta.len()
    }

    pub fn n_circuits(&self) -> usize {
        self.circuit_members.len()
    }

    pub fn circuit_of(&self, k: usize) -> usize {
        self.circuit_of[k] as usize
    }

    /// Living members of circuit `c`.
    pub fn circuit_members(&self, c: usize) -> &[u32] {
        &self.circuit_members[c]
    }

    pub fn is_alive(&self, k: usize) -> bool {
        self.alive[k]
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn w_hat(&self) -> &[f64] {
        &self.w_hat
    }

    /// Synapse ids with post neuron `k`.
    pub fn synapses_of(&self, k: usize) -> core::ops::Range<usize> {
        self.post_offsets[k]..self.post_offsets[k + 1]
    }

    pub fn pre(&self, s: usize) -> usize {
        self.pre[s] as usize
    }

    pub fn post(&self, s: usize) -> usize {
        self.post[s] as usize
    }

    /// Id of the synapse `pre → post`, if it exists.
    pub fn find_synapse(&self, pre: usize, post: usize) -> Option<usize> {
        let r = self.synapses_of(post);
        let ids = &self.pre[r.clone()];
        ids.binary_search(&(pre as u32)).ok().map(|i| r.start + i)
    }

    pub fn is_lateral(&self, s: usize) -> bool {
        self.pre(s) >= self.n_inputs()
    }

    pub fn synapse(&self, s: usize) -> SynapseRecord {
        let theta = self.theta[s];
        SynapseRecord {
            id: s,
            pre: self.pre(s),
            post: self.post(s),
            theta,
            w: efficacy(theta, self.params.theta0),
            w_hat: self.w_hat[s],
            functional: theta > 0.0,
            delay_ms: if self.is_lateral(s) { self.params.lateral_delay_ms } else { 0.0 },
            regrowth_banned: self.status[s] & BANNED != 0,
            removed: self.status[s] & REMOVED != 0,
        }
    }

    pub fn is_banned(&self, s: usize) -> bool {
        self.status[s] & BANNED != 0
    }

    pub fn is_removed(&self, s: usize) -> bool {
        self.status[s] & REMOVED != 0
    }

    /// Functional, not banned, not removed.
    pub fn is_active(&self, s: usize) -> bool {
        self.status[s] == 0 && self.theta[s] > 0.0
    }

    pub fn set_theta(&mut self, s: usize, theta: f64) -> Result<()> {
        ensure!(theta.is_finite(), "theta must be finite");
        self.theta[s] = theta;
        self.refresh(s);
        Ok(())
    }

    #[inline]
    pub(crate) fn refresh(&mut self, s: usize) {
        self.w_hat[s] = if self.status[s] != 0 { 0.0 } else { effective_weight(self.theta[s], self.params.theta0) };
    }

    /// `Σᵢ ŵ_{ki} xᵢ` for post neuron `k` over the source traces `x`.
    #[inline]
    pub fn synaptic_drive(&self, k: usize, x: &[f64]) -> f64 {
        let mut u = 0.0;
        for b in &self.blocks[self.block_offsets[k]..self.block_offsets[k + 1]] {
            let s = b.syn_start as usize;
            let src = b.source_start as usize;
            let n = b.len as usize;
            u += math::dot(&self.w_hat[s..s + n], &x[src..src + n]);
        }
        u
    }

    /// Removes network neurons: they leave their circuit's normalization and
    /// all their incoming and outgoing synapses are deleted.
    pub fn remove_neurons(&mut self, neurons: &[usize]) -> Result<()> {
        for &k in neurons {
            ensure!(k < self.n_hidden(), "neuron {k} out of range");
        }
        for &k in neurons {
            self.alive[k] = false;
            let c = self.circuit_of[k] as usize;
            self.circuit_members[c].retain(|&m| m as usize != k);
        }
        let n_in = self.n_inputs() as u32;
        for s in 0..self.n_synapses() {
            let p = self.post[s] as usize;
            let src = self.pre[s];
            if !self.alive[p] || (src >= n_in && !self.alive[(src - n_in) as usize]) {
                self.status[s] |= REMOVED;
                self.w_hat[s] = 0.0;
            }
        }
        Ok(())
    }

    /// Deletes synapses and forbids their regrowth; `θ` keeps evolving
    /// under prior and noise while `ŵ` stays 0.
    pub fn ban_synapses(&mut self, synapses: &[usize]) -> Result<()> {
        for &s in synapses {
            ensure!(s < self.n_synapses(), "synapse {s} out of range");
        }
        for &s in synapses {
            self.status[s] |= BANNED;
            self.w_hat[s] = 0.0;
        }
        Ok(())
    }

    /// Count of synapses that are functional, not banned and not removed.
    pub fn active_synapse_count(&self) -> usize {
        (0..self.n_synapses()).filter(|&s| self.is_active(s)).count()
    }

    /// Count of synapses that still exist (not removed).
    pub fn potential_synapse_count(&self) -> usize {
        self.status.iter().filter(|&&s| s & REMOVED == 0).count()
    }

    pub(crate) fn check_sources(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_sources() {
            return Err(Error::Argument(alloc::format!("expected {} source traces, got {}", self.n_sources(), x.len())));
        }
        Ok(())
    }
}

/// `u_k = Σᵢ ŵ_{ki} xᵢ + β_k`
pub fn membrane_potential(net: &WtaNetwork, k: usize, x: &[f64], beta: f64) -> Result<f64> {
    net.check_sources(x)?;
    ensure!(k < net.n_hidden(), "neuron {k} out of range");
    Ok(net.synaptic_drive(k, x) + beta)
}

/// Divisively normalized rates `ρ_k = ρ_net · e^{u_k} / Σ_l e^{u_l}`.
pub fn circuit_rates(u: &[f64], rho_net: f64) -> Result<Vec<f64>> {
    ensure!(!u.is_empty(), "a circuit needs at least one neuron");
    let mut out = vec![0.0; u.len()];
    softmax_into(u, rho_net, &mut out);
    Ok(out)
}

#[inline]
pub(crate) fn softmax_into(u: &[f64], scale: f64, out: &mut [f64]) {
    let m = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for (o, &v) in out.iter_mut().zip(u) {
        *o = math::exp(v - m);
        z += *o;
    }
    let f = scale / z;
    for o in out.iter_mut() {
        *o *= f;
    }
}

/// STDP-like likelihood gradient at a postsynaptic spike, `x − α·e^w`;
/// zero without a spike.
pub fn likelihood_grad_spiking(post_spike: bool, x: f64, w: f64, alpha: f64) -> f64 {
    if post_spike {
        x - alpha * math::exp(w)
    } else {
        0.0
    }
}

/// Per-neuron Poisson spike counts for one step of `dt_ms`.
pub fn draw_spikes(rates_hz: &[f64], dt_ms: f64, rng: &mut ChainRng) -> Vec<u32> {
    rates_hz.iter().map(|&r| rng.poisson(r * dt_ms * 1e-3)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net(n_in: usize, k: usize) -> WtaNetwork {
        WtaNetwork::new(WtaParams::default(), Topology::single_circuit(n_in, k), &PriorSpec::WTA, &mut ChainRng::seed_from_u64(1))
            .unwrap()
    }

    #[test]
    fn effective_weight_construction() {
        assert_eq!(effective_weight(0.0, 3.0), 0.0);
        assert_eq!(effective_weight(-2.0, 3.0), 0.0);
        assert!((effective_weight(3.0, 3.0) - (1.0 - (-3.0f64).exp())).abs() < 1e-15);
        assert!((efficacy(3.0, 3.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn membrane_potential_examples() {
        let mut n = net(2, 1);
        n.set_theta(0, -1.0).unwrap();
        n.set_theta(1, -1.0).unwrap();
        assert_eq!(membrane_potential(&n, 0, &[0.0, 0.0, 0.0], 0.0).unwrap(), 0.0);
        n.set_theta(0, 3.0).unwrap();
        let u = membrane_potential(&n, 0, &[2.0, 0.0, 0.0], -0.5).unwrap();
        assert!((u - (1.9004 - 0.5)).abs() < 1e-4);
        n.set_theta(1, 4.0).unwrap();
        n.ban_synapses(&[1]).unwrap();
        let u2 = membrane_potential(&n, 0, &[2.0, 5.0, 0.0], -0.5).unwrap();
        assert_eq!(u, u2);
        assert!(membrane_potential(&n, 0, &[1.0], 0.0).is_err());
    }

    #[test]
    fn rates_examples() {
        let r = circuit_rates(&[0.3; 4], 100.0).unwrap();
        assert!(r.iter().all(|&v| (v - 25.0).abs() < 1e-12));
        assert_eq!(circuit_rates(&[17.0], 100.0).unwrap(), vec![100.0]);
        let a = circuit_rates(&[0.1, 2.0, -1.0], 100.0).unwrap();
        let b = circuit_rates(&[5.1, 7.0, 4.0], 100.0).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        let big = circuit_rates(&[800.0, 799.0], 100.0).unwrap();
        assert!((big.iter().sum::<f64>() - 100.0).abs() < 1e-12);
        assert!(circuit_rates(&[], 100.0).is_err());
    }

    #[test]
    fn likelihood_grad_examples() {
        let a = (-2.0f64).exp();
        assert_eq!(likelihood_grad_spiking(false, 3.0, 1.0, a), 0.0);
        assert!(likelihood_grad_spiking(true, a * 1.3f64.exp(), 1.3, a).abs() < 1e-15);
        assert!((likelihood_grad_spiking(true, 1.5, 2.0, a) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn poisson_counts() {
        let mut rng = ChainRng::seed_from_u64(3);
        let mut total = 0u64;
        let mut total2 = 0u64;
        for _ in 0..100_000 {
            total += draw_spikes(&[100.0, 0.0], 1.0, &mut rng).iter().map(|&c| c as u64).sum::<u64>();
            total2 += draw_spikes(&[200.0], 1.0, &mut rng)[0] as u64;
        }
        assert!((9_400..=10_600).contains(&total), "{total}");
        let ratio = total2 as f64 / total as f64;
        assert!((ratio - 2.0).abs() < 0.1);
    }

    #[test]
    fn topology_layout() {
        let topo = Topology {
            n_inputs: 3,
            circuits: vec![2, 2],
            projections: vec![
                Projection { source_start: 0, source_end: 3, target_start: 0, target_end: 2 },
                Projection { source_start: 3, source_end: 7, target_start: 0, target_end: 4 },
            ],
        };
        let n = WtaNetwork::new(WtaParams::default(), topo, &PriorSpec::WTA, &mut ChainRng::seed_from_u64(2)).unwrap();
        // neurons 0,1: 3 inputs + 3 lateral; neurons 2,3: 3 lateral
        assert_eq!(n.n_synapses(), 6 + 6 + 3 + 3);
        for k in 0..4 {
            assert!(n.find_synapse(3 + k, k).is_none());
            for s in n.synapses_of(k) {
                assert_eq!(n.post(s), k);
                assert_eq!(n.find_synapse(n.pre(s), k), Some(s));
            }
        }
        let lat = n.find_synapse(3, 1).unwrap();
        assert_eq!(n.synapse(lat).delay_ms, 5.0);
        assert_eq!(n.synapse(n.find_synapse(0, 1).unwrap()).delay_ms, 0.0);
        // x drives via the block layout exactly like a dense sum
        let x: Vec<f64> = (0..7).map(|i| 0.1 * i as f64 + 0.05).collect();
        for k in 0..4 {
            let dense: f64 = n.synapses_of(k).map(|s| n.w_hat()[s] * x[n.pre(s)]).sum();
            assert!((n.synaptic_drive(k, &x) - dense).abs() < 1e-12);
        }
    }

    #[test]
    fn overlapping_projections_are_rejected() {
        let topo = Topology {
            n_inputs: 4,
            circuits: vec![2],
            projections: vec![
                Projection { source_start: 0, source_end: 3, target_start: 0, target_end: 2 },
                Projection { source_start: 2, source_end: 4, target_start: 0, target_end: 1 },
            ],
        };
        assert!(WtaNetwork::new(WtaParams::default(), topo, &PriorSpec::WTA, &mut ChainRng::seed_from_u64(2)).is_err());
    }

    #[test]
    fn lesions() {
        let mut n = net(5, 4);
        for s in 0..n.n_synapses() {
            n.set_theta(s, 3.0).unwrap();
        }
        assert_eq!(n.active_synapse_count(), 20);
        n.remove_neurons(&[2]).unwrap();
        assert_eq!(n.circuit_members(0), &[0, 1, 3]);
        assert_eq!(n.active_synapse_count(), 15);
        n.ban_synapses(&[0, 1]).unwrap();
        assert_eq!(n.active_synapse_count(), 13);
        assert_eq!(n.w_hat()[0], 0.0);
        let once = n.clone();
        n.ban_synapses(&[0, 1]).unwrap();
        n.remove_neurons(&[2]).unwrap();
        assert_eq!(n, once);
    }

    #[test]
    fn prior_draws_give_expected_functional_fraction() {
        let n = net(400, 10);
        let f = n.active_synapse_count() as f64 / n.n_synapses() as f64;
        // P(θ > 0) for θ ~ N(0.5, 1)
        assert!((f - 0.6915).abs() < 0.02, "{f}");
    }
}
