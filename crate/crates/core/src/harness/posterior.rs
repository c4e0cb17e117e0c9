//! Conjugate-Gaussian checks of the sampler against closed forms.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::log::ExperimentLog;
use super::Experiment;
use crate::error::Result;
use crate::langevin::models::ConjugateGaussian;
use crate::langevin::{
    anneal_to_map, run_chain, AnnealOptions, ChainMode, ChainOptions, ChainTrajectory, InputOrder, ParameterState,
    SamplerConfig, SpeedProfile, TemperatureSchedule,
};
use crate::math;
use crate::stats::{ks_critical_value, ks_statistic};

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PosteriorSuiteConfig {
    pub observations: Vec<f64>,
    pub prior_mean: f64,
    pub prior_std: f64,
    pub obs_std: f64,
    pub b: f64,
    pub dt: f64,
    pub steps: u64,
    /// Independent chains pooled per check.
    pub chains: u32,
    pub thin_moments: u64,
    pub thin_ks: u64,
    pub anneal_max_steps: u64,
    /// Online-vs-batch check: `N·dt·b` is set by these.
    pub online_b: f64,
    pub online_dt: f64,
    pub online_steps: u64,
    pub online_chains: u32,
    pub seed: u64,
}

impl Default for PosteriorSuiteConfig {
    fn default() -> Self {
        Self {
            observations: vec![1.5, 2.5, 2.0, 3.0, 3.0],
            prior_mean: 0.0,
            prior_std: 1.0,
            obs_std: 1.0,
            b: 1e-3,
            dt: 0.1,
            steps: 1_000_000,
            chains: 64,
            thin_moments: 100,
            thin_ks: 5_000,
            anneal_max_steps: 100_000,
            online_b: 0.1,
            online_dt: 0.002,
            online_steps: 2_000_000,
            online_chains: 16,
            seed: 1,
        }
    }
}

/// One pass/fail line.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CheckResult {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub pass: bool,
}

const CHECKS: [&str; 6] = ["stationary", "temperature_0.5", "temperature_2", "map_limit", "speed_profile", "online_batch"];

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PosteriorSuite {
    pub cfg: PosteriorSuiteConfig,
    next: usize,
    pub results: Vec<CheckResult>,
    log: ExperimentLog,
}

impl PosteriorSuite {
    pub fn new(cfg: PosteriorSuiteConfig) -> Result<Self> {
        let seed = cfg.seed;
        Self::model_of(&cfg)?;
        Ok(Self { cfg, next: 0, results: Vec::new(), log: ExperimentLog::new("validate-posterior", seed) })
    }

    fn model_of(cfg: &PosteriorSuiteConfig) -> Result<ConjugateGaussian> {
        ConjugateGaussian::new(cfg.prior_mean, cfg.prior_std, cfg.obs_std, cfg.observations.clone())
    }

    fn sampler(&self, temperature: f64, speed: SpeedProfile, chain: u32, salt: u64) -> SamplerConfig {
        SamplerConfig {
            learning_rate_b: self.cfg.b,
            temperature,
            dataset_size: 1,
            dt: self.cfg.dt,
            seed: chain_seed(self.cfg.seed, salt, chain),
            speed,
            ..SamplerConfig::default()
        }
    }

    fn pooled(&self, m: &ConjugateGaussian, temperature: f64, speed: SpeedProfile, salt: u64) -> Result<Vec<ChainTrajectory>> {
        let opts = ChainOptions::new(self.cfg.steps, ChainMode::Batch).thin(self.cfg.thin_moments);
        (0..self.cfg.chains)
            .map(|c| run_chain(ParameterState::new(vec![m.prior_mean]), m, &self.sampler(temperature, speed, c, salt), &opts))
            .collect()
    }

    fn push(&mut self, name: &str, measured: f64, threshold: f64) {
        let pass = measured < threshold;
        self.results.push(CheckResult { name: name.to_string(), measured, threshold, pass });
    }

    /// Relative mean/variance errors and the KS statistic of pooled chains.
    fn moment_checks(&mut self, label: &str, temperature: f64, speed: SpeedProfile, salt: u64) -> Result<()> {
        let m = Self::model_of(&self.cfg)?;
        let chains = self.pooled(&m, temperature, speed, salt)?;
        let xs: Vec<f64> = chains.iter().flat_map(|c| c.component(0)).collect();
        let mean = math::mean(&xs);
        let var = math::variance(&xs);
        let want_var = temperature * m.posterior_variance();
        let step = (self.cfg.thin_ks / self.cfg.thin_moments).max(1) as usize;
        let ks_xs: Vec<f64> = chains.iter().flat_map(|c| c.component(0).into_iter().step_by(step)).collect();
        let d = ks_statistic(&ks_xs, |x| m.tempered_cdf(x, temperature))?;
        let crit = ks_critical_value(ks_xs.len(), 0.05);
        if temperature == 1.0 {
            self.push(&alloc::format!("{label}_mean_rel_err"), (mean / m.posterior_mean() - 1.0).abs(), 0.02);
        }
        self.push(&alloc::format!("{label}_var_rel_err"), (var / want_var - 1.0).abs(), 0.05);
        self.push(&alloc::format!("{label}_ks"), d, crit);
        Ok(())
    }

    fn map_check(&mut self) -> Result<()> {
        let m = Self::model_of(&self.cfg)?;
        let cfg = self.sampler(0.0, SpeedProfile::Constant, 0, 3);
        let opts = AnnealOptions { max_steps: self.cfg.anneal_max_steps, ..AnnealOptions::default() };
        let s = anneal_to_map(ParameterState::new(vec![m.prior_mean - 3.0]), &m, &cfg, &TemperatureSchedule::Zero, &opts)?;
        self.push("map_abs_err", (s.values[0] - m.posterior_mean()).abs(), 1e-6);
        Ok(())
    }

    /// Chain means of batch and online (cyclic) chains; the difference is
    /// compared with its standard error from the spread of chain means.
    fn online_check(&mut self) -> Result<()> {
        let m = Self::model_of(&self.cfg)?;
        let n = m.obs.len() as u32;
        let mut means = [Vec::new(), Vec::new()];
        for (k, mode) in [ChainMode::Batch, ChainMode::Online { order: InputOrder::Cyclic }].into_iter().enumerate() {
            for c in 0..self.cfg.online_chains {
                let cfg = SamplerConfig {
                    learning_rate_b: self.cfg.online_b,
                    dt: self.cfg.online_dt,
                    dataset_size: if k == 0 { 1 } else { n },
                    temperature: 1.0,
                    seed: chain_seed(self.cfg.seed, 5 + k as u64, c),
                    ..SamplerConfig::default()
                };
                let opts = ChainOptions::new(self.cfg.online_steps, mode).thin(self.cfg.thin_moments);
                let t = run_chain(ParameterState::new(vec![m.posterior_mean()]), &m, &cfg, &opts)?;
                means[k].push(math::mean(&t.component(0)));
            }
        }
        let se = math::sqrt(
            math::variance(&means[0]) / means[0].len() as f64 + math::variance(&means[1]) / means[1].len() as f64,
        );
        let gap = (math::mean(&means[0]) - math::mean(&means[1])).abs();
        self.push("online_batch_gap_in_se", gap / se, 3.0);
        Ok(())
    }
}

fn chain_seed(base: u64, salt: u64, chain: u32) -> u64 {
    base.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (salt << 40) ^ chain as u64
}

impl Experiment for PosteriorSuite {
    fn advance(&mut self) -> Result<bool> {
        if self.next >= CHECKS.len() {
            return Ok(true);
        }
        let before = self.results.len();
        match self.next {
            0 => self.moment_checks("stationary", 1.0, SpeedProfile::Constant, 0)?,
            1 => self.moment_checks("temperature_0.5", 0.5, SpeedProfile::Constant, 1)?,
            2 => self.moment_checks("temperature_2", 2.0, SpeedProfile::Constant, 2)?,
            3 => self.map_check()?,
            4 => self.moment_checks("speed_profile", 1.0, SpeedProfile::Tanh { amplitude: 0.5 }, 4)?,
            _ => self.online_check()?,
        }
        for (i, r) in self.results[before..].iter().enumerate() {
            self.log.record(
                "checks",
                &["check", "item", "measured", "threshold", "pass"],
                &[self.next as f64, i as f64, r.measured, r.threshold, r.pass as u8 as f64],
            )?;
            self.log.event(0.0, "check", r.name.clone());
        }
        self.next += 1;
        Ok(self.next >= CHECKS.len())
    }

    fn log(&self) -> &ExperimentLog {
        &self.log
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_suite_runs_and_passes_at_a_fast_rate() {
        // b·dt large enough to mix in few steps; EM bias stays well inside 5%
        let cfg = PosteriorSuiteConfig {
            b: 1.0,
            dt: 0.002,
            steps: 200_000,
            chains: 8,
            thin_moments: 20,
            thin_ks: 400,
            anneal_max_steps: 100_000,
            online_b: 1.0,
            online_dt: 2e-4,
            online_steps: 200_000,
            online_chains: 8,
            ..PosteriorSuiteConfig::default()
        };
        let mut s = PosteriorSuite::new(cfg).unwrap();
        while !s.advance().unwrap() {}
        assert_eq!(s.results.len(), 12);
        for r in &s.results {
            assert!(r.pass, "{r:?}");
        }
        assert_eq!(s.log().metric("checks").unwrap().rows.len(), 12);
    }
}
