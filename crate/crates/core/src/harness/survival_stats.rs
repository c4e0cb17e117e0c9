//! Lifetimes of newly formed synapses in a WTA circuit under ongoing plasticity.

use alloc::vec;
use alloc::vec::Vec;

use super::log::ExperimentLog;
use super::patterns::digit_prototype;
use super::schedule::{encode_gray8, presentation, simulate, InputSchedule, GAP_MS, NOISE_RATE_HZ, PATTERN_MS};
use super::survival::{fit_power_law, log_grid, survival_curve, PowerLawFit, SurvivalCurve, SurvivalTracker};
use super::Experiment;
use crate::error::{ensure, Result};
use crate::priors::PriorSpec;
use crate::rng::ChainRng;
use crate::wta::{Plasticity, Simulator, Topology, WtaNetwork, WtaParams};

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SurvivalStatsConfig {
    pub n_hidden: usize,
    pub b: f64,
    pub gamma: f64,
    pub param_interval_ms: f64,
    /// Functional flags are read at this cadence; births and deaths are
    /// resolved to it.
    pub snapshot_ms: f64,
    pub duration_s: f64,
    /// Synapses born in `[window_start_s, window_start_s + window_s)` enter the curve.
    pub window_start_s: f64,
    pub window_s: f64,
    pub chunk_s: f64,
    pub n_ages: usize,
    /// Survival level at which the fitted curve defines the time scale.
    pub level: f64,
    /// Ages whose surviving fraction is below this are left out of the fit.
    pub fit_floor: f64,
    pub seed: u64,
}

impl Default for SurvivalStatsConfig {
    fn default() -> Self {
        Self {
            n_hidden: 10,
            b: 1e-4,
            gamma: -0.2,
            param_interval_ms: 100.0,
            snapshot_ms: 1000.0,
            duration_s: 20_000.0,
            window_start_s: 0.0,
            window_s: 5_000.0,
            chunk_s: 1_000.0,
            n_ages: 25,
            level: 0.1,
            fit_floor: 0.1,
            seed: 23,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SurvivalSummary {
    pub curve: SurvivalCurve,
    pub fit: PowerLawFit,
    /// Ages (ms) spanned by the fitted points.
    pub fit_range_ms: (f64, f64),
    /// Age (ms) at which the fit reaches the configured level.
    pub time_scale_ms: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SurvivalStats {
    pub cfg: SurvivalStatsConfig,
    patterns: Vec<Vec<f64>>,
    rng: ChainRng,
    tracker: SurvivalTracker,
    sim: Simulator,
    summary: Option<SurvivalSummary>,
    log: ExperimentLog,
}

impl SurvivalStats {
    pub fn new(cfg: SurvivalStatsConfig) -> Result<Self> {
        ensure!(cfg.snapshot_ms >= 1.0 && libm::trunc(cfg.snapshot_ms) == cfg.snapshot_ms, "snapshot_ms must be a whole number of ms");
        ensure!(cfg.chunk_s > 0.0 && cfg.duration_s >= cfg.chunk_s, "duration must cover at least one chunk");
        let trial_s = (PATTERN_MS + GAP_MS) / 1000.0;
        let per_chunk = cfg.chunk_s / trial_s;
        ensure!(libm::fabs(per_chunk - libm::round(per_chunk)) < 1e-9, "chunk_s must be a whole number of presentations");
        ensure!(cfg.window_s > 0.0 && cfg.window_start_s + cfg.window_s <= cfg.duration_s, "birth window must lie inside the run");
        ensure!(cfg.n_ages >= 5, "need at least 5 ages");
        ensure!(cfg.level > 0.0 && cfg.level < 1.0, "level must lie in (0, 1)");
        ensure!(cfg.fit_floor > 0.0 && cfg.fit_floor < 1.0, "fit_floor must lie in (0, 1)");
        let mut rng = ChainRng::with_stream(cfg.seed, 0);
        let patterns = vec![encode_gray8(&digit_prototype(1)?), encode_gray8(&digit_prototype(2)?)];
        let params = WtaParams { gamma: cfg.gamma, ..WtaParams::default() };
        let net = WtaNetwork::new(params, Topology::single_circuit(patterns[0].len(), cfg.n_hidden), &PriorSpec::WTA, &mut rng)?;
        let plasticity = Plasticity { b: cfg.b, param_interval_ms: cfg.param_interval_ms, ..Plasticity::default() };
        let sim = Simulator::new(net, plasticity, cfg.seed)?;
        let tracker = SurvivalTracker::new(sim.network());
        Ok(Self { log: ExperimentLog::new("survival-stats", cfg.seed), cfg, patterns, rng, tracker, sim, summary: None })
    }

    pub fn simulator(&self) -> &Simulator {
        &self.sim
    }

    pub fn tracker(&self) -> &SurvivalTracker {
        &self.tracker
    }

    pub fn summary(&self) -> Option<&SurvivalSummary> {
        self.summary.as_ref()
    }

    fn finish(&mut self) -> Result<()> {
        let end = self.sim.time_ms();
        let w0 = self.cfg.window_start_s * 1000.0;
        let window = (w0, w0 + self.cfg.window_s * 1000.0);
        let ages = log_grid(self.cfg.snapshot_ms, end - w0, self.cfg.n_ages);
        let curve = survival_curve(self.tracker.records(), window, end, &ages)?;
        for (a, f) in curve.ages_ms.iter().zip(&curve.fraction) {
            self.log.record("survival", &["age_s", "fraction"], &[a / 1000.0, *f])?;
        }
        // the tail rests on few births; keep at least ten behind every point
        let floor = self.cfg.fit_floor.max(10.0 / curve.births as f64);
        let (t, y): (Vec<f64>, Vec<f64>) =
            curve.ages_ms.iter().zip(&curve.fraction).filter(|(_, &f)| f >= floor).map(|(a, f)| (*a, *f)).unzip();
        let fit = fit_power_law(&t, &y)?;
        let fit_range_ms = (t[0], *t.last().unwrap());
        let time_scale_ms = fit.time_at(self.cfg.level);
        self.log.record(
            "power_law",
            &["births", "deaths", "exponent", "intercept", "r2", "fit_from_s", "fit_to_s", "time_scale_s"],
            &[
                curve.births as f64,
                curve.deaths as f64,
                fit.exponent,
                fit.intercept,
                fit.r2,
                fit_range_ms.0 / 1000.0,
                fit_range_ms.1 / 1000.0,
                time_scale_ms / 1000.0,
            ],
        )?;
        self.summary = Some(SurvivalSummary { curve, fit, fit_range_ms, time_scale_ms });
        Ok(())
    }
}

impl Experiment for SurvivalStats {
    fn advance(&mut self) -> Result<bool> {
        let total_ms = self.cfg.duration_s * 1000.0;
        if self.sim.time_ms() + 0.5 >= total_ms {
            return Ok(true);
        }
        let n = libm::round(self.cfg.chunk_s * 1000.0 / (PATTERN_MS + GAP_MS)) as usize;
        let t0 = self.sim.time_ms();
        let mut sched = InputSchedule::default();
        if t0 > 0.0 {
            sched.push(t0, vec![NOISE_RATE_HZ; self.patterns[0].len()], None);
        }
        for _ in 0..n {
            let o = self.rng.index(2);
            sched.segments.extend(presentation(&self.patterns[o], o as u32 + 1));
        }
        let until = sched.total_duration_ms().min(total_ms);
        let snap = self.cfg.snapshot_ms;
        let tracker = &mut self.tracker;
        simulate(&mut self.sim, &sched, until, |sim, _| {
            let t = sim.time_ms();
            if t % snap == 0.0 {
                tracker.observe(sim.network(), t);
            }
        })?;
        let net = self.sim.network();
        self.log.record(
            "progress",
            &["time_s", "active", "records"],
            &[self.sim.time_ms() / 1000.0, net.active_synapse_count() as f64, self.tracker.records().len() as f64],
        )?;
        if self.sim.time_ms() + 0.5 < total_ms {
            return Ok(false);
        }
        self.finish()?;
        Ok(true)
    }

    fn log(&self) -> &ExperimentLog {
        &self.log
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SurvivalStatsConfig {
        SurvivalStatsConfig {
            n_hidden: 3,
            b: 0.05,
            duration_s: 60.0,
            window_s: 20.0,
            chunk_s: 20.0,
            snapshot_ms: 100.0,
            n_ages: 12,
            fit_floor: 0.01,
            ..SurvivalStatsConfig::default()
        }
    }

    #[test]
    fn tiny_run_produces_a_monotone_curve() {
        let mut e = SurvivalStats::new(tiny()).unwrap();
        let mut chunks = 1;
        while !e.advance().unwrap() {
            chunks += 1;
        }
        assert_eq!(chunks, 3);
        let s = e.summary().unwrap();
        assert!(s.curve.births >= 20);
        assert!(s.curve.fraction.windows(2).all(|w| w[1] <= w[0]));
        assert!(s.fit.exponent < 0.0);
        assert!(e.advance().unwrap());
    }

    #[test]
    fn bad_configs_are_rejected() {
        assert!(SurvivalStats::new(SurvivalStatsConfig { snapshot_ms: 0.5, ..tiny() }).is_err());
        assert!(SurvivalStats::new(SurvivalStatsConfig { window_s: 100.0, ..tiny() }).is_err());
        assert!(SurvivalStats::new(SurvivalStatsConfig { chunk_s: 0.3, ..tiny() }).is_err());
        assert!(SurvivalStats::new(SurvivalStatsConfig { level: 1.0, ..tiny() }).is_err());
        assert!(SurvivalStats::new(SurvivalStatsConfig { fit_floor: 1.0, ..tiny() }).is_err());
    }
}
