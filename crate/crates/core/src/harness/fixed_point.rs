//! Stationarity of strong synapses: at equilibrium the input trace seen at
//! postsynaptic spikes balances `α·e^w`.

use alloc::vec;
use alloc::vec::Vec;

use super::log::ExperimentLog;
use super::patterns::digit_prototype;
use super::schedule::{encode_gray8, presentation, run_segments, simulate, InputSchedule, GAP_MS, PATTERN_MS};
use super::Experiment;
use crate::error::{ensure, Result};
use crate::math;
use crate::priors::PriorSpec;
use crate::rng::ChainRng;
use crate::wta::{efficacy, Plasticity, Simulator, Topology, WtaNetwork, WtaParams};

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FixedPointConfig {
    pub n_hidden: usize,
    pub train_presentations: usize,
    pub measure_presentations: usize,
    /// Presentations per chunk.
    pub chunk: usize,
    pub b: f64,
    pub gamma: f64,
    pub param_interval_ms: f64,
    /// A synapse is stable if `θ` stays above this at every spike of its
    /// postsynaptic neuron during measurement.
    pub stable_theta: f64,
    /// Minimum postsynaptic spikes during measurement.
    pub min_spikes: u64,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        Self {
            n_hidden: 10,
            train_presentations: 4000,
            measure_presentations: 2000,
            chunk: 500,
            b: 2e-3,
            gamma: -0.2,
            param_interval_ms: 10.0,
            stable_theta: 3.0,
            min_spikes: 200,
            tolerance: 0.2,
            seed: 17,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SynapseBalance {
    pub synapse: usize,
    pub spikes: u64,
    /// Mean `x_i` at postsynaptic spikes.
    pub mean_x: f64,
    /// Mean `α·e^w` at the same spikes.
    pub mean_target: f64,
}

impl SynapseBalance {
    pub fn relative_error(&self) -> f64 {
        (self.mean_x - self.mean_target).abs() / self.mean_target
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FixedPointReport {
    pub stable: Vec<SynapseBalance>,
    pub within_tolerance: usize,
    pub median_relative_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FixedPoint {
    pub cfg: FixedPointConfig,
    patterns: Vec<Vec<f64>>,
    order: Vec<u8>,
    done: usize,
    sum_x: Vec<f64>,
    sum_target: Vec<f64>,
    spikes: Vec<u64>,
    min_theta: Vec<f64>,
    sim: Simulator,
    log: ExperimentLog,
}

impl FixedPoint {
    pub fn new(cfg: FixedPointConfig) -> Result<Self> {
        ensure!(cfg.n_hidden >= 2, "need at least two hidden neurons");
        ensure!(cfg.measure_presentations >= 1 && cfg.chunk >= 1, "empty measurement");
        ensure!(cfg.tolerance > 0.0, "tolerance must be positive");
        let mut rng = ChainRng::with_stream(cfg.seed, 0);
        let patterns = vec![encode_gray8(&digit_prototype(1)?), encode_gray8(&digit_prototype(2)?)];
        let n = cfg.train_presentations + cfg.measure_presentations;
        let order = (0..n).map(|_| rng.index(2) as u8).collect();
        let params = WtaParams { gamma: cfg.gamma, ..WtaParams::default() };
        let net = WtaNetwork::new(params, Topology::single_circuit(patterns[0].len(), cfg.n_hidden), &PriorSpec::WTA, &mut rng)?;
        let plasticity = Plasticity { b: cfg.b, param_interval_ms: cfg.param_interval_ms, ..Plasticity::default() };
        let sim = Simulator::new(net, plasticity, cfg.seed)?;
        let ns = sim.network().n_synapses();
        let mut log = ExperimentLog::new("fixed-point", cfg.seed);
        log.phase_boundaries_ms = vec![cfg.train_presentations as f64 * (PATTERN_MS + GAP_MS)];
        Ok(Self {
            cfg,
            patterns,
            order,
            done: 0,
            sum_x: vec![0.0; ns],
            sum_target: vec![0.0; ns],
            spikes: vec![0; ns],
            min_theta: vec![f64::INFINITY; ns],
            sim,
            log,
        })
    }

    pub fn simulator(&self) -> &Simulator {
        &self.sim
    }

    pub fn report(&self) -> FixedPointReport {
        let mut stable = Vec::new();
        for s in 0..self.spikes.len() {
            let n = self.spikes[s];
            if n >= self.cfg.min_spikes && self.min_theta[s] > self.cfg.stable_theta {
                stable.push(SynapseBalance {
                    synapse: s,
                    spikes: n,
                    mean_x: self.sum_x[s] / n as f64,
                    mean_target: self.sum_target[s] / n as f64,
                });
            }
        }
        let within = stable.iter().filter(|b| b.relative_error() <= self.cfg.tolerance).count();
        let mut errs: Vec<f64> = stable.iter().map(|b| b.relative_error()).collect();
        errs.sort_by(f64::total_cmp);
        let median_relative_error = match errs.len() {
            0 => f64::NAN,
            n if n % 2 == 1 => errs[n / 2],
            n => 0.5 * (errs[n / 2 - 1] + errs[n / 2]),
        };
        FixedPointReport { stable, within_tolerance: within, median_relative_error }
    }
}

impl Experiment for FixedPoint {
    fn advance(&mut self) -> Result<bool> {
        let total = self.order.len();
        if self.done >= total {
            return Ok(true);
        }
        let train = self.cfg.train_presentations;
        let end = if self.done < train { (self.done + self.cfg.chunk).min(train) } else { (self.done + self.cfg.chunk).min(total) };
        let segs: Vec<_> =
            self.order[self.done..end].iter().flat_map(|&o| presentation(&self.patterns[o as usize], o as u32 + 1)).collect();
        if self.done < train {
            run_segments(&mut self.sim, segs)?;
        } else {
            let mut sched = InputSchedule::default();
            let t0 = self.sim.time_ms();
            sched.push(t0, vec![1.0; self.patterns[0].len()], None);
            sched.segments.extend(segs);
            let until = sched.total_duration_ms();
            let (sum_x, sum_t, spikes, min_th) = (&mut self.sum_x, &mut self.sum_target, &mut self.spikes, &mut self.min_theta);
            simulate(&mut self.sim, &sched, until, |sim, _| {
                let net = sim.network();
                let x = sim.traces();
                let (theta0, alpha) = (net.params.theta0, net.params.alpha);
                for &k in sim.spikes() {
                    for s in net.synapses_of(k as usize) {
                        let th = net.theta()[s];
                        if th < min_th[s] {
                            min_th[s] = th;
                        }
                        spikes[s] += 1;
                        sum_x[s] += x[net.pre(s)];
                        sum_t[s] += alpha * math::exp(efficacy(th, theta0));
                    }
                }
            })?;
        }
        self.done = end;
        let net = self.sim.network();
        self.log.record(
            "progress",
            &["time_s", "active", "post_spikes"],
            &[self.sim.time_ms() / 1000.0, net.active_synapse_count() as f64, self.sim.stats().post_spikes as f64],
        )?;
        if self.done < total {
            return Ok(false);
        }
        let r = self.report();
        for b in &r.stable {
            let net = self.sim.network();
            self.log.record(
                "balance",
                &["pre", "post", "spikes", "mean_x", "mean_target", "relative_error"],
                &[net.pre(b.synapse) as f64, net.post(b.synapse) as f64, b.spikes as f64, b.mean_x, b.mean_target, b.relative_error()],
            )?;
        }
        self.log.record(
            "summary",
            &["stable", "within_tolerance", "median_relative_error"],
            &[r.stable.len() as f64, r.within_tolerance as f64, r.median_relative_error],
        )?;
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
    fn short_run_accumulates_only_during_measurement() {
        let cfg = FixedPointConfig {
            train_presentations: 10,
            measure_presentations: 10,
            chunk: 4,
            min_spikes: 1,
            stable_theta: f64::NEG_INFINITY,
            ..FixedPointConfig::default()
        };
        let mut e = FixedPoint::new(cfg.clone()).unwrap();
        for _ in 0..3 {
            assert!(!e.advance().unwrap());
        }
        assert!(e.spikes.iter().all(|&n| n == 0));
        let mut chunks = 3;
        while !e.advance().unwrap() {
            chunks += 1;
        }
        assert_eq!(chunks, 5);
        assert_eq!(e.simulator().time_ms(), 20.0 * 250.0);
        let r = e.report();
        assert!(!r.stable.is_empty());
        assert!(r.stable.iter().all(|b| b.mean_target > 0.0 && b.mean_x >= 0.0));
        let mut f = FixedPoint::new(cfg).unwrap();
        while !f.advance().unwrap() {}
        assert_eq!(e.log(), f.log());
    }
}
