//! Chain diagnostics: moments, Kolmogorov-Smirnov distance, autocorrelation.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::langevin::ChainTrajectory;
use crate::linalg::Matrix;
use crate::math;

/// Minimum number of samples accepted by [`stationary_moments`].
pub const MIN_SAMPLES: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct Moments {
    pub mean: Vec<f64>,
    /// Unbiased sample covariance.
    pub cov: Matrix,
}

impl Moments {
    pub fn variance(&self, i: usize) -> f64 {
        self.cov.get(i, i)
    }
}

pub fn stationary_moments(traj: &ChainTrajectory) -> Result<Moments> {
    let n = traj.len();
    if n < MIN_SAMPLES {
        return Err(Error::Statistics { count: n, required: MIN_SAMPLES });
    }
    let m = traj.dim();
    let mut mean = vec![0.0; m];
    for s in &traj.samples {
        for (a, v) in mean.iter_mut().zip(&s.values) {
            *a += v;
        }
    }
    for a in &mut mean {
        *a /= n as f64;
    }
    let mut cov = Matrix::zeros(m, m);
    let mut d = vec![0.0; m];
    for s in &traj.samples {
        for i in 0..m {
            d[i] = s.values[i] - mean[i];
        }
        for i in 0..m {
            for j in i..m {
                *cov.get_mut(i, j) += d[i] * d[j];
            }
        }
    }
    for i in 0..m {
        for j in i..m {
            let v = cov.get(i, j) / (n - 1) as f64;
            *cov.get_mut(i, j) = v;
            *cov.get_mut(j, i) = v;
        }
    }
    Ok(Moments { mean, cov })
}

/// Two-sided KS statistic `sup |F_n − F|` of `xs` against `cdf`.
pub fn ks_statistic(xs: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::Statistics { count: 0, required: 1 });
    }
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(d.clamp(0.0, 1.0))
}

/// KS statistic of a scalar chain.
pub fn ks_distance(traj: &ChainTrajectory, cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if traj.dim() > 1 {
        return Err(Error::arg("ks_distance needs a scalar chain"));
    }
    ks_statistic(&traj.component(0), cdf)
}

/// Asymptotic KS critical value `c(α)/√n` with `c(α) = √(−ln(α/2)/2)`.
pub fn ks_critical_value(n: usize, alpha: f64) -> f64 {
    math::sqrt(-math::log(alpha / 2.0) / 2.0) / math::sqrt(n as f64)
}

/// Sample autocorrelation at `lag`.
pub fn autocorrelation(xs: &[f64], lag: usize) -> f64 {
    if lag >= xs.len() {
        return 0.0;
    }
    let mu = math::mean(xs);
    let var: f64 = xs.iter().map(|x| (x - mu) * (x - mu)).sum();
    if var == 0.0 {
        return 0.0;
    }
    let c: f64 = xs.windows(lag + 1).map(|w| (w[0] - mu) * (w[lag] - mu)).sum();
    c / var
}

/// Pearson correlation; 0 if either input is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    if n < 2 {
        return 0.0;
    }
    let (ma, mb) = (math::mean(&a[..n]), math::mean(&b[..n]));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for i in 0..n {
        let (x, y) = (a[i] - ma, b[i] - mb);
        sab += x * y;
        saa += x * x;
        sbb += y * y;
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / math::sqrt(saa * sbb)
    }
}
