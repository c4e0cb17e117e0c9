//! Synaptic sampling: stochastic parameter dynamics whose stationary
//! distribution is a tempered Bayesian posterior `p(θ | x)^(1/T)`.
//!
//! The crate is `no_std` (with `alloc`) and carries every algorithmic piece:
//!
//! * [`langevin`]: model-agnostic Euler-Maruyama sampler (batch, online and
//!   hidden-state variants) with a sampling-speed profile `b(θ)`.
//! * [`priors`]: factorized log-priors (Gaussian, two-component mixture,
//!   uniform) and their gradients.
//! * [`rbm`]: binary restricted Boltzmann machine with contrastive-divergence
//!   gradients and exact enumeration oracles for tiny instances.
//! * [`wta`]: event-driven spiking winner-take-all circuits with combined
//!   synaptic and structural plasticity (`w = exp(θ − θ₀)`).
//! * [`harness`]: experiment protocols and their metrics.
//! * [`stats`] / [`linalg`]: the small numerical toolbox the above share.
//!
//! File formats, configuration parsing and the command line live in the
//! companion `synsamp` crate.
#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod error;
pub mod harness;
pub mod langevin;
pub mod linalg;
pub mod math;
pub mod priors;
pub mod rbm;
pub mod rng;
pub mod stats;
pub mod wta;

pub use error::{Error, Result};
pub use rng::{ChainRng, RngState};
