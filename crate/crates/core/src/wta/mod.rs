//! Spiking winner-take-all circuits with synaptic sampling.
//!
//! Network neurons fire Poisson spikes at `ρ_k = ρ_net·softmax(u)_k` within
//! their circuit, where `u_k = Σᵢ ŵ_{ki} xᵢ + β_k`. Each potential synapse
//! carries one parameter `θ`: it is functional iff `θ > 0`, with efficacy
//! `w = exp(θ − θ₀)`. Time is stepped at `dt` (1 ms by default).

mod kernel;
mod network;
mod sim;

pub use kernel::{advance_traces, sample_kernel, summed_trace, Decay, DoubleExp, TraceState};
pub use network::{
    circuit_rates, draw_spikes, effective_weight, efficacy, likelihood_grad_spiking, membrane_potential, Block,
    Projection, SynapseRecord, Topology, WtaNetwork, WtaParams,
};
pub use sim::{Plasticity, SimStats, Simulator};
