use alloc::vec::Vec;

use crate::error::{ensure, Result};
use crate::math;

/// `k(s) = Θ(s)·(e^(−s/τ_f) − e^(−s/τ_r))`, times in ms.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DoubleExp {
    pub tau_r: f64,
    pub tau_f: f64,
}

impl DoubleExp {
    /// EPSP shape, `τ_r = 2 ms`, `τ_f = 20 ms`.
    pub const EPSP: DoubleExp = DoubleExp { tau_r: 2.0, tau_f: 20.0 };
    /// Adaptation kernel, `τ_r = 12 s`, `τ_f = 30 s`.
    pub const ADAPTATION: DoubleExp = DoubleExp { tau_r: 12_000.0, tau_f: 30_000.0 };

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.tau_r > 0.0 && self.tau_r < self.tau_f,
            "kernel needs 0 < tau_r < tau_f, got ({}, {})",
            self.tau_r,
            self.tau_f
        );
        Ok(())
    }

    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        if s <= 0.0 {
            0.0
        } else {
            math::exp(-s / self.tau_f) - math::exp(-s / self.tau_r)
        }
    }

    /// `s* = τ_f τ_r / (τ_f − τ_r) · ln(τ_f / τ_r)`
    pub fn peak_time(&self) -> f64 {
        self.tau_f * self.tau_r / (self.tau_f - self.tau_r) * math::log(self.tau_f / self.tau_r)
    }

    pub fn peak_value(&self) -> f64 {
        self.eval(self.peak_time())
    }

    /// `∫₀^∞ k(s) ds = τ_f − τ_r`
    pub fn integral(&self) -> f64 {
        self.tau_f - self.tau_r
    }
}

/// Direct superposition `Σ_f k(t − t_f)` over the spikes at or before `t`.
pub fn summed_trace(kernel: &DoubleExp, spike_times: &[f64], t: f64) -> f64 {
    spike_times.iter().filter(|&&s| s <= t).map(|&s| kernel.eval(t - s)).sum()
}

/// Recursive form of [`summed_trace`] on a fixed grid: two exponentially
/// decaying accumulators whose difference is the summed kernel. Exact at
/// grid points for spikes that land on the grid.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceState {
    pub fall: f64,
    pub rise: f64,
}

impl TraceState {
    #[inline]
    pub fn value(&self) -> f64 {
        self.fall - self.rise
    }
}

/// Per-step decay factors of a [`DoubleExp`] at step `dt`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Decay {
    pub fall: f64,
    pub rise: f64,
}

impl Decay {
    pub fn new(kernel: &DoubleExp, dt: f64) -> Self {
        Self { fall: math::exp(-dt / kernel.tau_f), rise: math::exp(-dt / kernel.tau_r) }
    }

    #[inline]
    pub fn advance(&self, s: &mut TraceState) {
        s.fall *= self.fall;
        s.rise *= self.rise;
    }
}

/// Advances a set of traces by one step and adds `counts` new spikes.
pub fn advance_traces(decay: &Decay, fall: &mut [f64], rise: &mut [f64], counts: &[u32]) {
    for ((f, r), &c) in fall.iter_mut().zip(rise.iter_mut()).zip(counts) {
        *f *= decay.fall;
        *r *= decay.rise;
        if c != 0 {
            *f += c as f64;
            *r += c as f64;
        }
    }
}

/// Sampled kernel on `0, dt, 2dt, …` (for plotting).
pub fn sample_kernel(kernel: &DoubleExp, dt: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| kernel.eval(i as f64 * dt)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsp_values() {
        let k = DoubleExp::EPSP;
        assert_eq!(k.eval(-1.0), 0.0);
        assert_eq!(k.eval(0.0), 0.0);
        assert!((k.peak_time() - 5.117).abs() < 1e-3);
        assert!((k.peak_value() - 0.69684).abs() < 1e-4);
        let expect = (-1.0f64).exp() - (-10.0f64).exp();
        assert!((k.eval(20.0) - expect).abs() < 1e-12);
        assert!((k.eval(20.0) - 0.36783).abs() < 1e-5);
        assert!(k.eval(2000.0) < 1e-40);
        // derivative vanishes at the analytic peak
        let h = 1e-5;
        let s = k.peak_time();
        assert!(((k.eval(s + h) - k.eval(s - h)) / (2.0 * h)).abs() < 1e-8);
    }

    #[test]
    fn adaptation_peak() {
        let k = DoubleExp::ADAPTATION;
        let s = 30_000.0 * 12_000.0 / 18_000.0 * (2.5f64).ln();
        assert!((k.peak_time() - s).abs() < 1e-6);
        let v = (-s / 30_000.0).exp() - (-s / 12_000.0).exp();
        assert!((k.peak_value() - v).abs() < 1e-12);
        assert!(DoubleExp { tau_r: 3.0, tau_f: 2.0 }.validate().is_err());
    }

    #[test]
    fn summed_trace_properties() {
        let k = DoubleExp::EPSP;
        assert_eq!(summed_trace(&k, &[], 10.0), 0.0);
        let t = 100.0;
        assert!((summed_trace(&k, &[t - k.peak_time()], t) - 0.69684).abs() < 1e-4);
        let spikes = [3.0, 17.0, 40.5, 88.0];
        let one = summed_trace(&k, &spikes, t);
        let doubled: Vec<f64> = spikes.iter().chain(spikes.iter()).cloned().collect();
        assert_eq!(summed_trace(&k, &doubled, t), 2.0 * one);
    }

    #[test]
    fn recursive_trace_matches_direct_sum() {
        let k = DoubleExp::EPSP;
        let d = Decay::new(&k, 1.0);
        let spikes = [2u32, 5, 5, 9, 30, 31];
        let mut s = TraceState::default();
        for step in 0..80u32 {
            d.advance(&mut s);
            let c = spikes.iter().filter(|&&x| x == step).count() as f64;
            s.fall += c;
            s.rise += c;
            let times: Vec<f64> = spikes.iter().map(|&x| x as f64).collect();
            assert!((s.value() - summed_trace(&k, &times, step as f64)).abs() < 1e-12);
        }
    }
}
