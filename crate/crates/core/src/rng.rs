//! Per-chain random number generation.
//!
//! Every chain owns one [`ChainRng`]: a ChaCha8 stream that can be split by
//! stream id (independent chains, evaluation clones) and whose full position
//! can be captured in an [`RngState`] for bit-identical resumption.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{ensure, Result};
use crate::math;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChainRng {
    inner: ChaCha8Rng,
}

/// Complete generator position: key, stream and word offset.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RngState {
    pub seed: [u8; 32],
    pub stream: u64,
    /// Word position split into (high, low) 64-bit halves.
    pub word_pos: [u64; 2],
}

impl ChainRng {
    pub fn seed_from_u64(seed: u64) -> Self {
        Self { inner: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Independent stream `stream` under the key derived from `seed`.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner }
    }

    /// A new generator on a different stream of the same key, starting at
    /// word 0. Does not advance `self`.
    pub fn fork(&self, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::from_seed(self.inner.get_seed());
        inner.set_stream(stream);
        Self { inner }
    }

    pub fn state(&self) -> RngState {
        let pos = self.inner.get_word_pos();
        RngState {
            seed: self.inner.get_seed(),
            stream: self.inner.get_stream(),
            word_pos: [(pos >> 64) as u64, pos as u64],
        }
    }

    pub fn from_state(state: &RngState) -> Self {
        let mut inner = ChaCha8Rng::from_seed(state.seed);
        inner.set_stream(state.stream);
        inner.set_word_pos(((state.word_pos[0] as u128) << 64) | state.word_pos[1] as u128);
        Self { inner }
    }

    /// Uniform draw in `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    #[inline]
    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    /// Uniform index in `0..n`.
    #[inline]
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    /// Poisson count with mean `lambda`; exact inversion for the small means
    /// of per-step spike counts, library sampler otherwise.
    pub fn poisson(&mut self, lambda: f64) -> u32 {
        if lambda <= 0.0 {
            return 0;
        }
        if lambda < 30.0 {
            let u = self.uniform();
            let mut p = math::exp(-lambda);
            let mut cdf = p;
            let mut k = 0u32;
            while u > cdf && k < 1000 {
                k += 1;
                p *= lambda / k as f64;
                cdf += p;
            }
            k
        } else {
            let d = rand_distr::Poisson::new(lambda).expect("positive finite mean");
            let v: f64 = d.sample(&mut self.inner);
            v as u32
        }
    }

    /// Poisson count for a small mean with `p0 = exp(−lambda)` precomputed.
    #[inline]
    pub fn poisson_small(&mut self, lambda: f64, p0: f64) -> u32 {
        let u = self.uniform();
        if u < p0 {
            return 0;
        }
        let mut p = p0;
        let mut cdf = p0;
        let mut k = 0u32;
        while u >= cdf && k < 1000 {
            k += 1;
            p *= lambda / k as f64;
            cdf += p;
        }
        k
    }

    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.index(i + 1);
            xs.swap(i, j);
        }
    }
}

impl RngCore for ChainRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Increment of a standard Wiener process over `dt`: a draw from
/// `Normal(0, dt)`.
pub fn wiener_increment(dt: f64, rng: &mut ChainRng) -> Result<f64> {
    ensure!(dt > 0.0 && dt.is_finite(), "wiener increment needs dt > 0, got {dt}");
    Ok(math::sqrt(dt) * rng.normal())
}
