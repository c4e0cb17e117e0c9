use alloc::vec;
use alloc::vec::Vec;

use super::schedule::SpikeEvent;
use crate::error::{ensure, Result};
use crate::linalg::{ridge, Matrix};
use crate::math;

/// One-vs-rest linear readout trained by ridge regression on standardized
/// features.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReadoutModel {
    pub n_classes: usize,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    /// Per class: feature weights followed by the intercept.
    pub weights: Vec<Vec<f64>>,
}

fn distinct(labels: &[usize]) -> usize {
    let mut seen: Vec<usize> = labels.to_vec();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}

impl ReadoutModel {
    pub fn train(x: &[Vec<f64>], y: &[usize], lambda: f64) -> Result<Self> {
        ensure!(x.len() == y.len() && !x.is_empty(), "features and labels must be non-empty and aligned");
        ensure!(distinct(y) >= 2, "training labels need >= 2 classes");
        ensure!(lambda > 0.0, "ridge lambda must be > 0");
        let d = x[0].len();
        ensure!(x.iter().all(|r| r.len() == d), "ragged feature rows");
        let n_classes = y.iter().max().unwrap() + 1;
        let n = x.len() as f64;
        let mut mean = vec![0.0; d];
        for r in x {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v / n;
            }
        }
        let mut scale = vec![0.0; d];
        for r in x {
            for j in 0..d {
                scale[j] += (r[j] - mean[j]) * (r[j] - mean[j]) / n;
            }
        }
        for s in &mut scale {
            *s = if *s > 1e-12 { 1.0 / math::sqrt(*s) } else { 0.0 };
        }
        let mut data = Vec::with_capacity(x.len() * d);
        for r in x {
            data.extend((0..d).map(|j| (r[j] - mean[j]) * scale[j]));
        }
        let z = Matrix::from_row_major(x.len(), d, data)?;
        let mut weights = Vec::with_capacity(n_classes);
        for c in 0..n_classes {
            let t: Vec<f64> = y.iter().map(|&l| if l == c { 1.0 } else { 0.0 }).collect();
            let tm = math::mean(&t);
            let tc: Vec<f64> = t.iter().map(|v| v - tm).collect();
            let mut w = ridge(&z, &tc, lambda)?;
            w.push(tm);
            weights.push(w);
        }
        Ok(Self { n_classes, mean, scale, weights })
    }

    pub fn scores(&self, f: &[f64]) -> Vec<f64> {
        let d = self.mean.len();
        self.weights
            .iter()
            .map(|w| (0..d).map(|j| w[j] * (f[j] - self.mean[j]) * self.scale[j]).sum::<f64>() + w[d])
            .collect()
    }

    pub fn predict(&self, f: &[f64]) -> usize {
        let s = self.scores(f);
        let mut best = 0;
        for (i, v) in s.iter().enumerate() {
            if *v > s[best] {
                best = i;
            }
        }
        best
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReadoutScore {
    pub accuracy: f64,
    /// Recall per class; NaN for classes absent from the test split.
    pub per_class: Vec<f64>,
}

/// Trains on one split and scores the other. Callers keep the windows of
/// the two splits disjoint.
pub fn train_eval_readout(
    train_x: &[Vec<f64>],
    train_y: &[usize],
    test_x: &[Vec<f64>],
    test_y: &[usize],
    lambda: f64,
) -> Result<ReadoutScore> {
    ensure!(test_x.len() == test_y.len(), "test features and labels must align");
    ensure!(distinct(test_y) >= 2, "test labels need >= 2 classes");
    let m = ReadoutModel::train(train_x, train_y, lambda)?;
    ensure!(test_x.iter().all(|r| r.len() == m.mean.len()), "test feature width differs from training");
    let k = m.n_classes.max(test_y.iter().max().unwrap() + 1);
    let mut hit = vec![0usize; k];
    let mut tot = vec![0usize; k];
    for (f, &l) in test_x.iter().zip(test_y) {
        tot[l] += 1;
        if m.predict(f) == l {
            hit[l] += 1;
        }
    }
    let correct: usize = hit.iter().sum();
    let per_class = hit.iter().zip(&tot).map(|(&h, &t)| if t == 0 { f64::NAN } else { h as f64 / t as f64 }).collect();
    Ok(ReadoutScore { accuracy: correct as f64 / test_x.len() as f64, per_class })
}

/// Per-window spike counts of every neuron in `0..n_neurons`; events must
/// be time-ordered. Window `(a, b)` counts spikes with `a < t ≤ b`.
pub fn window_counts(spikes: &[SpikeEvent], n_neurons: usize, windows: &[(f64, f64)]) -> Vec<Vec<f64>> {
    windows
        .iter()
        .map(|&(a, b)| {
            let lo = spikes.partition_point(|e| e.time_ms <= a);
            let hi = spikes.partition_point(|e| e.time_ms <= b);
            let mut c = vec![0.0; n_neurons];
            for e in &spikes[lo..hi] {
                if (e.neuron as usize) < n_neurons {
                    c[e.neuron as usize] += 1.0;
                }
            }
            c
        })
        .collect()
}

/// Exponentially filtered spike trains, `Σ exp(−(t − t_f)/τ)` over
/// spikes up to `t`, sampled at `times`.
pub fn lowpass_features(spikes: &[SpikeEvent], n_neurons: usize, times: &[f64], tau_ms: f64) -> Vec<Vec<f64>> {
    times
        .iter()
        .map(|&t| {
            let hi = spikes.partition_point(|e| e.time_ms <= t);
            let lo = spikes.partition_point(|e| e.time_ms <= t - 10.0 * tau_ms);
            let mut f = vec![0.0; n_neurons];
            for e in &spikes[lo..hi] {
                if (e.neuron as usize) < n_neurons {
                    f[e.neuron as usize] += math::exp(-(t - e.time_ms) / tau_ms);
                }
            }
            f
        })
        .collect()
}
