//! Overfitting versus prior-regularized sampling on a tiny RBM.

use alloc::vec;
use alloc::vec::Vec;

use super::log::ExperimentLog;
use super::patterns::stroke_dataset;
use super::Experiment;
use crate::error::{ensure, Result};
use crate::langevin::SamplerConfig;
use crate::priors::PriorSpec;
use crate::rbm::{exact_log_likelihood, init_params, sampling_update, BinaryPattern, RbmParams};
use crate::rng::ChainRng;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RbmGenConfig {
    pub n_hidden: usize,
    pub n_test: usize,
    pub prior: PriorSpec,
    /// `η = b·dt`.
    pub b: f64,
    pub dt: f64,
    pub n_data: u32,
    pub temperature: f64,
    pub cd_k: usize,
    pub updates: u64,
    pub checkpoints: usize,
    /// Independent runs averaged into one curve.
    pub runs: u32,
    pub seed: u64,
}

impl Default for RbmGenConfig {
    fn default() -> Self {
        Self {
            n_hidden: 4,
            n_test: 20,
            prior: PriorSpec::RBM_BIMODAL,
            b: 1e-3,
            dt: 0.1,
            n_data: 100,
            temperature: 1.0,
            cd_k: 5,
            updates: 200_000,
            checkpoints: 41,
            runs: 4,
            seed: 7,
        }
    }
}

/// Distinct log-spaced update counts in `[0, last]`, starting with 0.
pub fn log_checkpoints(last: u64, n: usize) -> Vec<u64> {
    let mut out = vec![0u64];
    let top = libm::log10(last.max(1) as f64);
    for k in 1..n {
        let v = libm::round(libm::pow(10.0, top * k as f64 / (n - 1).max(1) as f64)) as u64;
        if v > *out.last().unwrap() {
            out.push(v.min(last));
        }
    }
    if *out.last().unwrap() != last {
        out.push(last);
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RbmGenSummary {
    pub peak: f64,
    pub peak_at: u64,
    pub end: f64,
    /// `(peak − end) / |peak|`
    pub drop_from_peak: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RbmGeneralization {
    pub cfg: RbmGenConfig,
    train: Vec<BinaryPattern>,
    test: Vec<BinaryPattern>,
    checkpoints: Vec<u64>,
    test_ll: Vec<f64>,
    train_ll: Vec<f64>,
    run: u32,
    update: u64,
    next_cp: usize,
    params: RbmParams,
    rng: ChainRng,
    log: ExperimentLog,
}

impl RbmGeneralization {
    pub fn new(cfg: RbmGenConfig) -> Result<Self> {
        ensure!(cfg.runs >= 1 && cfg.updates >= 1 && cfg.checkpoints >= 2, "runs, updates and checkpoints must be positive");
        cfg.prior.validate()?;
        let (train, test) = stroke_dataset(cfg.n_test, &mut ChainRng::with_stream(cfg.seed, 0));
        let checkpoints = log_checkpoints(cfg.updates, cfg.checkpoints);
        let mut rng = ChainRng::with_stream(cfg.seed, 1);
        let params = init_params(16, cfg.n_hidden, &mut rng)?;
        let n = checkpoints.len();
        Ok(Self {
            log: ExperimentLog::new("rbm-generalization", cfg.seed),
            cfg,
            train,
            test,
            checkpoints,
            test_ll: vec![0.0; n],
            train_ll: vec![0.0; n],
            run: 0,
            update: 0,
            next_cp: 0,
            params,
            rng,
        })
    }

    pub fn checkpoints(&self) -> &[u64] {
        &self.checkpoints
    }

    /// Run-averaged mean test log-likelihood at each checkpoint.
    pub fn test_curve(&self) -> &[f64] {
        &self.test_ll
    }

    pub fn train_curve(&self) -> &[f64] {
        &self.train_ll
    }

    pub fn summary(&self) -> RbmGenSummary {
        let mut best = 0;
        for (i, v) in self.test_ll.iter().enumerate() {
            if *v > self.test_ll[best] {
                best = i;
            }
        }
        let peak = self.test_ll[best];
        let end = *self.test_ll.last().unwrap();
        RbmGenSummary { peak, peak_at: self.checkpoints[best], end, drop_from_peak: (peak - end) / peak.abs() }
    }

    fn sampler(&self) -> SamplerConfig {
        SamplerConfig {
            learning_rate_b: self.cfg.b,
            dt: self.cfg.dt,
            dataset_size: self.cfg.n_data,
            temperature: self.cfg.temperature,
            ..SamplerConfig::default()
        }
    }
}

impl Experiment for RbmGeneralization {
    /// One chunk runs up to the next checkpoint and evaluates there.
    fn advance(&mut self) -> Result<bool> {
        if self.run >= self.cfg.runs {
            return Ok(true);
        }
        let idx = self.next_cp;
        let target = self.checkpoints[idx];
        let prior = self.cfg.prior.validate()?;
        let cfg = self.sampler();
        while self.update < target {
            let x = &self.train[self.rng.index(self.train.len())];
            sampling_update(&mut self.params, x, &prior, &cfg, self.cfg.cd_k, &mut self.rng)?;
            self.update += 1;
        }
        let runs = self.cfg.runs as f64;
        let te = exact_log_likelihood(&self.params, &self.test)?;
        let tr = exact_log_likelihood(&self.params, &self.train)?;
        self.test_ll[idx] += te / runs;
        self.train_ll[idx] += tr / runs;
        self.log.record("run_log_likelihood", &["run", "updates", "test", "train"], &[self.run as f64, target as f64, te, tr])?;
        self.next_cp += 1;
        if self.next_cp < self.checkpoints.len() {
            return Ok(false);
        }
        self.run += 1;
        if self.run < self.cfg.runs {
            self.rng = ChainRng::with_stream(self.cfg.seed, 1 + self.run as u64);
            self.params = init_params(16, self.cfg.n_hidden, &mut self.rng)?;
            self.update = 0;
            self.next_cp = 0;
            return Ok(false);
        }
        for i in 0..self.checkpoints.len() {
            self.log.record(
                "log_likelihood",
                &["updates", "test", "train"],
                &[self.checkpoints[i] as f64, self.test_ll[i], self.train_ll[i]],
            )?;
        }
        Ok(true)
    }

    fn log(&self) -> &ExperimentLog {
        &self.log
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkpoints_are_distinct_and_bracket() {
        let c = log_checkpoints(200_000, 41);
        assert_eq!(c[0], 0);
        assert_eq!(*c.last().unwrap(), 200_000);
        assert!(c.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(log_checkpoints(5, 2), vec![0, 5]);
    }

    #[test]
    fn short_run_is_deterministic() {
        let cfg = RbmGenConfig { updates: 2_000, checkpoints: 8, runs: 2, ..RbmGenConfig::default() };
        let mut a = RbmGeneralization::new(cfg.clone()).unwrap();
        while !a.advance().unwrap() {}
        let mut b = RbmGeneralization::new(cfg).unwrap();
        while !b.advance().unwrap() {}
        assert_eq!(a.log(), b.log());
        assert_eq!(a.test_curve().len(), a.checkpoints().len());
        assert!(a.test_curve().iter().all(|v| v.is_finite() && *v < 0.0));
        assert!(a.train_curve().last().unwrap() > &a.train_curve()[0]);
    }
}
