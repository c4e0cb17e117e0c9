//! Changing input statistics: digit 1, then 1 and 2, then 1 again.

use alloc::vec;
use alloc::vec::Vec;

use super::log::ExperimentLog;
use super::patterns::{digit_pool, digit_prototype, noisy_digit};
use super::readout::{train_eval_readout, window_counts};
use super::schedule::{encode_gray8, presentation, run_segments, Segment, GAP_MS, PATTERN_MS};
use super::Experiment;
use crate::error::{ensure, Result};
use crate::priors::PriorSpec;
use crate::rng::ChainRng;
use crate::wta::{Plasticity, Simulator, Topology, WtaNetwork, WtaParams};

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WtaAdaptConfig {
    pub n_hidden: usize,
    /// Training variants per digit class.
    pub pool_size: usize,
    pub presentations_per_phase: usize,
    pub checkpoints_per_phase: usize,
    /// Held-out trials per readout evaluation, alternating classes.
    pub eval_trials: usize,
    pub b: f64,
    pub gamma: f64,
    pub param_interval_ms: f64,
    pub readout_lambda: f64,
    /// Upper bound on active synapses as a fraction of potential ones.
    pub sparsity_bound: f64,
    pub seed: u64,
}

impl Default for WtaAdaptConfig {
    fn default() -> Self {
        Self {
            n_hidden: 10,
            pool_size: 50,
            presentations_per_phase: 2000,
            checkpoints_per_phase: 6,
            eval_trials: 240,
            b: 2e-3,
            gamma: -0.2,
            param_interval_ms: 10.0,
            readout_lambda: 1.0,
            sparsity_bound: 0.6,
            seed: 11,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AdaptSummary {
    /// Readout accuracy at the last checkpoint of each phase.
    pub phase_end_accuracy: Vec<f64>,
    /// Active synapses over potential ones, maximum over the checkpoints of each phase.
    pub phase_max_active_fraction: Vec<f64>,
    /// Functional synapses from pixels lit only in digit 2, at the end of each phase.
    pub phase_end_support_two: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WtaAdaptation {
    pub cfg: WtaAdaptConfig,
    patterns: Vec<Vec<f64>>,
    labels: Vec<u32>,
    order: Vec<u32>,
    eval_patterns: Vec<Vec<f64>>,
    eval_labels: Vec<u32>,
    two_only: Vec<usize>,
    done: usize,
    next_cp: usize,
    sim: Simulator,
    log: ExperimentLog,
}

const PHASES: usize = 3;

impl WtaAdaptation {
    pub fn new(cfg: WtaAdaptConfig) -> Result<Self> {
        let mut rng = ChainRng::with_stream(cfg.seed, 0);
        let ones = digit_pool(1, cfg.pool_size, &mut rng)?;
        let twos = digit_pool(2, cfg.pool_size, &mut rng)?;
        Self::build(cfg, [ones, twos], None, rng)
    }

    /// Runs on supplied 8×8 gray images: the first `pool_size` of each class
    /// train, the next `eval_trials / 2` of each class are held out.
    pub fn with_digits(cfg: WtaAdaptConfig, ones: &[Vec<u8>], twos: &[Vec<u8>]) -> Result<Self> {
        let (n, h) = (cfg.pool_size, cfg.eval_trials / 2);
        ensure!(ones.len() >= n + h && twos.len() >= n + h, "need {} images per class, got {} and {}", n + h, ones.len(), twos.len());
        ensure!(ones.iter().chain(twos).all(|g| g.len() == 64), "images must be 8x8");
        let mut eval = Vec::with_capacity(2 * h);
        for i in 0..h {
            eval.push(ones[n + i].clone());
            eval.push(twos[n + i].clone());
        }
        let rng = ChainRng::with_stream(cfg.seed, 0);
        Self::build(cfg, [ones[..n].to_vec(), twos[..n].to_vec()], Some(eval), rng)
    }

    /// `eval` alternates 1, 2, 1, ...; fresh variants are drawn when absent.
    fn build(cfg: WtaAdaptConfig, pools: [Vec<Vec<u8>>; 2], eval: Option<Vec<Vec<u8>>>, mut rng: ChainRng) -> Result<Self> {
        ensure!(cfg.n_hidden >= 2, "need at least two hidden neurons");
        ensure!(cfg.pool_size >= 1 && cfg.presentations_per_phase >= 1, "empty training set");
        ensure!(
            cfg.checkpoints_per_phase >= 1 && cfg.checkpoints_per_phase <= cfg.presentations_per_phase,
            "checkpoints_per_phase must lie in 1..=presentations_per_phase"
        );
        ensure!(cfg.eval_trials >= 8 && cfg.eval_trials % 4 == 0, "eval_trials must be a multiple of 4, >= 8");
        ensure!(cfg.sparsity_bound > 0.0 && cfg.sparsity_bound <= 1.0, "sparsity_bound must lie in (0, 1]");
        let mut patterns = Vec::new();
        let mut labels = Vec::new();
        for (d, pool) in [1u32, 2].into_iter().zip(&pools) {
            for g in pool {
                patterns.push(encode_gray8(g));
                labels.push(d);
            }
        }
        let n = cfg.pool_size;
        let mut order = Vec::with_capacity(PHASES * cfg.presentations_per_phase);
        for phase in 0..PHASES {
            let span = if phase == 1 { 2 * n } else { n };
            for _ in 0..cfg.presentations_per_phase {
                order.push(rng.index(span) as u32);
            }
        }
        let eval = match eval {
            Some(e) => e,
            None => (0..cfg.eval_trials).map(|i| noisy_digit(1 + (i % 2), &mut rng)).collect::<Result<_>>()?,
        };
        let eval_patterns: Vec<Vec<f64>> = eval.iter().map(|g| encode_gray8(g)).collect();
        let eval_labels = (0..eval.len()).map(|i| 1 + (i % 2) as u32).collect();
        let (p1, p2) = (digit_prototype(1)?, digit_prototype(2)?);
        let two_only = (0..p1.len()).filter(|&i| p2[i] > 0 && p1[i] == 0).collect();

        let params = WtaParams { gamma: cfg.gamma, ..WtaParams::default() };
        let net = WtaNetwork::new(params, Topology::single_circuit(p1.len(), cfg.n_hidden), &PriorSpec::WTA, &mut rng)?;
        let plasticity = Plasticity { b: cfg.b, param_interval_ms: cfg.param_interval_ms, ..Plasticity::default() };
        let sim = Simulator::new(net, plasticity, cfg.seed)?;
        let mut log = ExperimentLog::new("wta-adapt", cfg.seed);
        let phase_ms = cfg.presentations_per_phase as f64 * (PATTERN_MS + GAP_MS);
        log.phase_boundaries_ms = vec![phase_ms, 2.0 * phase_ms];
        Ok(Self {
            cfg,
            patterns,
            labels,
            order,
            eval_patterns,
            eval_labels,
            two_only,
            done: 0,
            next_cp: 0,
            sim,
            log,
        })
    }

    pub fn simulator(&self) -> &Simulator {
        &self.sim
    }

    fn checkpoint_target(&self, cp: usize) -> usize {
        let per = self.cfg.checkpoints_per_phase;
        let phase = cp / per;
        phase * self.cfg.presentations_per_phase + (cp % per + 1) * self.cfg.presentations_per_phase / per
    }

    /// Balanced 1-vs-2 accuracy of a readout trained on the first half of
    /// the held-out trials and scored on the second, with plasticity frozen.
    pub fn evaluate(&self, stream: u64) -> Result<(f64, Vec<f64>)> {
        let mut s = self.sim.clone();
        s.set_plasticity_enabled(false);
        *s.rng_mut() = ChainRng::with_stream(self.cfg.seed, stream);
        let t0 = s.time_ms();
        let mut segs: Vec<Segment> = Vec::with_capacity(2 * self.eval_patterns.len());
        for (p, &l) in self.eval_patterns.iter().zip(&self.eval_labels) {
            segs.extend(presentation(p, l));
        }
        let events = run_segments(&mut s, segs)?;
        let trial = PATTERN_MS + GAP_MS;
        let windows: Vec<(f64, f64)> =
            (0..self.eval_patterns.len()).map(|i| (t0 + trial * i as f64, t0 + trial * i as f64 + PATTERN_MS)).collect();
        let f = window_counts(&events, self.cfg.n_hidden, &windows);
        let y: Vec<usize> = self.eval_labels.iter().map(|&l| l as usize - 1).collect();
        let h = y.len() / 2;
        let score = train_eval_readout(&f[..h], &y[..h], &f[h..], &y[h..], self.cfg.readout_lambda)?;
        Ok((score.accuracy, score.per_class))
    }

    fn support_two(&self) -> usize {
        let net = self.sim.network();
        (0..net.n_hidden())
            .flat_map(|k| self.two_only.iter().map(move |&i| (i, k)))
            .filter(|&(i, k)| net.find_synapse(i, k).is_some_and(|s| net.is_active(s)))
            .count()
    }

    pub fn summary(&self) -> Result<AdaptSummary> {
        let t = self.log.metric("readout").ok_or_else(|| crate::Error::Argument("no readout recorded yet".into()))?;
        let phase = t.column("phase").unwrap();
        let acc = t.column("accuracy").unwrap();
        let frac = t.column("active_fraction").unwrap();
        let sup = t.column("support_two").unwrap();
        let mut out = AdaptSummary {
            phase_end_accuracy: vec![f64::NAN; PHASES],
            phase_max_active_fraction: vec![f64::NAN; PHASES],
            phase_end_support_two: vec![f64::NAN; PHASES],
        };
        for i in 0..phase.len() {
            let p = phase[i] as usize - 1;
            out.phase_end_accuracy[p] = acc[i];
            out.phase_end_support_two[p] = sup[i];
            let m = &mut out.phase_max_active_fraction[p];
            *m = if m.is_nan() { frac[i] } else { m.max(frac[i]) };
        }
        Ok(out)
    }
}

impl Experiment for WtaAdaptation {
    /// One chunk runs to the next checkpoint and evaluates the readout there.
    fn advance(&mut self) -> Result<bool> {
        let total_cp = PHASES * self.cfg.checkpoints_per_phase;
        if self.next_cp >= total_cp {
            return Ok(true);
        }
        let target = self.checkpoint_target(self.next_cp);
        let mut segs = Vec::with_capacity(2 * (target - self.done));
        for &o in &self.order[self.done..target] {
            segs.extend(presentation(&self.patterns[o as usize], self.labels[o as usize]));
        }
        run_segments(&mut self.sim, segs)?;
        self.done = target;

        let (acc, recall) = self.evaluate(1000 + self.next_cp as u64)?;
        let net = self.sim.network();
        let active = net.active_synapse_count() as f64;
        let potential = net.potential_synapse_count() as f64;
        let phase = (self.next_cp / self.cfg.checkpoints_per_phase + 1) as f64;
        let t_s = self.sim.time_ms() / 1000.0;
        let support = self.support_two() as f64;
        self.log.record(
            "readout",
            &["time_s", "phase", "accuracy", "recall_1", "recall_2", "active", "active_fraction", "support_two"],
            &[t_s, phase, acc, recall[0], recall[1], active, active / potential, support],
        )?;
        let net = self.sim.network();
        for s in 0..net.n_synapses() {
            self.log.record("theta", &["time_s", "pre", "post", "theta"], &[t_s, net.pre(s) as f64, net.post(s) as f64, net.theta()[s]])?;
        }
        self.next_cp += 1;
        Ok(self.next_cp >= total_cp)
    }

    fn log(&self) -> &ExperimentLog {
        &self.log
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> WtaAdaptConfig {
        WtaAdaptConfig { presentations_per_phase: 12, checkpoints_per_phase: 2, eval_trials: 8, pool_size: 4, b: 0.02, ..WtaAdaptConfig::default() }
    }

    #[test]
    fn checkpoints_tile_the_phases() {
        let e = WtaAdaptation::new(WtaAdaptConfig { presentations_per_phase: 10, checkpoints_per_phase: 3, ..tiny() }).unwrap();
        let t: Vec<usize> = (0..9).map(|c| e.checkpoint_target(c)).collect();
        assert_eq!(t, vec![3, 6, 10, 13, 16, 20, 23, 26, 30]);
    }

    #[test]
    fn phase_one_and_three_show_only_ones() {
        let e = WtaAdaptation::new(tiny()).unwrap();
        let per = e.cfg.presentations_per_phase;
        for (i, &o) in e.order.iter().enumerate() {
            if i / per != 1 {
                assert_eq!(e.labels[o as usize], 1);
            }
        }
        assert!(e.order[per..2 * per].iter().any(|&o| e.labels[o as usize] == 2));
    }

    #[test]
    fn runs_to_completion_deterministically() {
        let mut a = WtaAdaptation::new(tiny()).unwrap();
        let mut b = WtaAdaptation::new(tiny()).unwrap();
        let mut chunks = 0;
        while !a.advance().unwrap() {
            chunks += 1;
        }
        while !b.advance().unwrap() {}
        assert_eq!(chunks, 5);
        assert_eq!(a.log(), b.log());
        assert_eq!(a.sim.time_ms(), 3.0 * 12.0 * 250.0);
        assert!(a.advance().unwrap());
        let s = a.summary().unwrap();
        assert_eq!(s.phase_end_accuracy.len(), 3);
        assert!(s.phase_end_accuracy.iter().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(a.log().metric("theta").unwrap().rows.len(), 6 * 640);
    }

    #[test]
    fn bad_configs_are_rejected() {
        assert!(WtaAdaptation::new(WtaAdaptConfig { eval_trials: 6, ..tiny() }).is_err());
        assert!(WtaAdaptation::new(WtaAdaptConfig { checkpoints_per_phase: 0, ..tiny() }).is_err());
        assert!(WtaAdaptation::new(WtaAdaptConfig { sparsity_bound: 0.0, ..tiny() }).is_err());
    }

    #[test]
    fn supplied_digits_are_used_and_held_out() {
        let cfg = tiny();
        let need = cfg.pool_size + cfg.eval_trials / 2;
        let ones: Vec<Vec<u8>> = (0..need).map(|i| if i < cfg.pool_size { digit_prototype(1).unwrap() } else { vec![7; 64] }).collect();
        let twos: Vec<Vec<u8>> = (0..need).map(|_| digit_prototype(2).unwrap()).collect();
        let e = WtaAdaptation::with_digits(cfg.clone(), &ones, &twos).unwrap();
        assert_eq!(e.patterns[0], encode_gray8(&ones[0]));
        assert_eq!(e.eval_patterns[0], encode_gray8(&[7; 64]));
        assert_eq!(e.eval_labels[..4], [1, 2, 1, 2]);
        assert!(WtaAdaptation::with_digits(cfg, &ones[..need - 1], &twos).is_err());
    }
}
