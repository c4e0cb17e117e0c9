//! Model-agnostic synaptic-sampling dynamics.
//!
//! Each parameter follows the tempered SDE
//!
//! ```text
//! dθᵢ = (b(θᵢ)·∂ᵢ log p_S(θ) + N·b(θᵢ)·∂ᵢ log p_N(xⁿ|θ) + T·b′(θᵢ)) dt + √(2·T·b(θᵢ)) dWᵢ
//! ```
//!
//! integrated with Euler-Maruyama at a fixed `dt`. With `N = 1` and the full
//! data likelihood this is the batch rule; with the per-input likelihood and
//! `N` inputs visited in turn it is the online rule. Its stationary density is
//! `p(θ|x)^(1/T)`; `T = 0` turns it into deterministic gradient ascent on the
//! log posterior.

mod anneal;
mod chain;
mod config;
mod drift;
pub mod models;
mod update;

pub use anneal::{anneal_to_map, posterior_grad_norm, AnnealOptions, TemperatureSchedule};
pub use chain::{
    run_chain, run_chain_with_hidden, Chain, ChainMode, ChainOptions, ChainTrajectory, InputOrder,
};
pub use config::{ParameterState, SamplerConfig, SpeedProfile};
pub use drift::{DataSel, DriftProvider, LatentDrift, Observed};
pub use update::{apply_update, discrete_update, Workspace};
