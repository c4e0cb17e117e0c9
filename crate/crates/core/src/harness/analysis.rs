use alloc::vec;
use alloc::vec::Vec;

use super::schedule::SpikeEvent;
use crate::error::{ensure, Result};
use crate::linalg::{symmetric_eigen, Matrix};
use crate::math;

/// Trial-averaged, Gaussian-smoothed firing rates.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Peth {
    pub bin_ms: f64,
    /// Neurons × bins, Hz.
    pub rates: Matrix,
    /// Neurons ordered by the bin of their peak rate (ties by id).
    pub order: Vec<usize>,
}

impl Peth {
    pub fn mean_rate(&self, k: usize) -> f64 {
        math::mean(self.rates.row(k))
    }
}

/// PETH over trials starting at `onsets_ms`, each `trial_ms` long. Every
/// spike is replaced by a Gaussian of width `sigma_ms` evaluated at bin
/// centres. Spike events must be time-ordered.
pub fn peth(
    spikes: &[SpikeEvent],
    n_neurons: usize,
    onsets_ms: &[f64],
    trial_ms: f64,
    sigma_ms: f64,
    bin_ms: f64,
) -> Result<Peth> {
    ensure!(!onsets_ms.is_empty(), "peth needs at least one trial");
    ensure!(trial_ms > 0.0 && bin_ms > 0.0 && sigma_ms > 0.0, "trial, bin and sigma must be > 0");
    let bins = libm::ceil(trial_ms / bin_ms) as usize;
    let mut rates = Matrix::zeros(n_neurons, bins);
    let norm = 1000.0 / (onsets_ms.len() as f64 * sigma_ms * math::SQRT_2PI);
    let reach = 4.0 * sigma_ms;
    for &t0 in onsets_ms {
        let lo = spikes.partition_point(|e| e.time_ms < t0 - reach);
        let hi = spikes.partition_point(|e| e.time_ms <= t0 + trial_ms + reach);
        for e in &spikes[lo..hi] {
            let k = e.neuron as usize;
            if k >= n_neurons {
                continue;
            }
            let s = e.time_ms - t0;
            let row = rates.row_mut(k);
            for (b, r) in row.iter_mut().enumerate() {
                let c = (b as f64 + 0.5) * bin_ms;
                let z = (c - s) / sigma_ms;
                if z.abs() <= 4.0 {
                    *r += norm * math::exp(-0.5 * z * z);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n_neurons).collect();
    let peak = |k: usize| {
        let row = rates.row(k);
        let mut best = 0;
        for (i, v) in row.iter().enumerate() {
            if *v > row[best] {
                best = i;
            }
        }
        best
    };
    order.sort_by_key(|&k| (peak(k), k));
    Ok(Peth { bin_ms, rates, order })
}

/// `efficacyᵀ · rates` rescaled so the largest pixel is 1. `efficacy` is
/// neurons × pixels.
pub fn reconstruct_stimulus(rates: &[f64], efficacy: &Matrix) -> Result<Vec<f64>> {
    ensure!(rates.len() == efficacy.rows(), "{} rates for {} neurons", rates.len(), efficacy.rows());
    let mut img = efficacy.t_mul_vec(rates);
    let hi = img.iter().cloned().fold(0.0, f64::max);
    if hi > 0.0 {
        for v in &mut img {
            *v = (*v / hi).max(0.0);
        }
    }
    Ok(img)
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Pca {
    /// Leading covariance eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Per snapshot, its coordinates on the leading components.
    pub projections: Vec<Vec<f64>>,
}

/// Projects centred snapshots onto the top `k` covariance eigenvectors.
/// Uses the smaller of the covariance and Gram matrices.
pub fn pca_trajectory(snapshots: &[Vec<f64>], k: usize) -> Result<Pca> {
    let n = snapshots.len();
    ensure!(k >= 1, "need k >= 1");
    ensure!(n > k, "need more than {k} snapshots, got {n}");
    let d = snapshots[0].len();
    ensure!(d >= k && snapshots.iter().all(|s| s.len() == d), "snapshots must share a width >= k");
    let mut mean = vec![0.0; d];
    for s in snapshots {
        for (m, v) in mean.iter_mut().zip(s) {
            *m += v / n as f64;
        }
    }
    let c: Vec<Vec<f64>> = snapshots.iter().map(|s| s.iter().zip(&mean).map(|(a, b)| a - b).collect()).collect();
    let denom = (n - 1) as f64;
    let mut projections = vec![vec![0.0; k]; n];
    let eigenvalues;
    if d <= n {
        let mut cov = Matrix::zeros(d, d);
        for r in &c {
            for i in 0..d {
                for j in i..d {
                    *cov.get_mut(i, j) += r[i] * r[j] / denom;
                }
            }
        }
        for i in 0..d {
            for j in 0..i {
                *cov.get_mut(i, j) = cov.get(j, i);
            }
        }
        let (vals, vecs) = symmetric_eigen(&cov)?;
        for (p, r) in projections.iter_mut().zip(&c) {
            for (q, pv) in p.iter_mut().enumerate() {
                *pv = (0..d).map(|i| r[i] * vecs.get(i, q)).sum();
            }
        }
        eigenvalues = vals[..k].to_vec();
    } else {
        let mut g = Matrix::zeros(n, n);
        for a in 0..n {
            for b in a..n {
                let v = math::dot(&c[a], &c[b]) / denom;
                *g.get_mut(a, b) = v;
                *g.get_mut(b, a) = v;
            }
        }
        let (vals, vecs) = symmetric_eigen(&g)?;
        for q in 0..k {
            let s = math::sqrt(vals[q].max(0.0) * denom);
            for (a, p) in projections.iter_mut().enumerate() {
                p[q] = vecs.get(a, q) * s;
            }
        }
        eigenvalues = vals[..k].to_vec();
    }
    Ok(Pca { eigenvalues, projections })
}
