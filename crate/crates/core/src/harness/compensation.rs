//! Lesion compensation in two recurrently coupled populations: auditory
//! inputs drive `z_A`, visual inputs drive `z_V`, and hidden neurons may
//! connect to each other freely. Performance is measured on audio-only
//! trials from `z_V` alone: the visual image implied by its activity is
//! reconstructed through the input efficacies and assigned to the class
//! whose mean training image it correlates with best.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::analysis::{pca_trajectory, peth, reconstruct_stimulus};
use super::lesion::{apply_lesion, functional_lateral, select_encoding_neurons, LesionKind, LesionSpec};
use super::log::ExperimentLog;
use super::patterns::{auditory_trial, digit_pool, AUDIO_INPUTS};
use super::readout::{train_eval_readout, window_counts};
use super::schedule::{encode_gray8, run_segments, Segment, SpikeEvent, NOISE_RATE_HZ};
use super::Experiment;
use crate::error::{ensure, Result};
use crate::linalg::Matrix;
use crate::stats::pearson;
use crate::priors::PriorSpec;
use crate::rng::ChainRng;
use crate::wta::{Plasticity, Projection, Simulator, Topology, WtaNetwork, WtaParams};

const VISUAL_INPUTS: usize = 64;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CompensationConfig {
    /// Circuits per population.
    pub circuits: usize,
    pub circuit_size: usize,
    pub frame_ms: f64,
    pub min_frames: usize,
    pub max_frames: usize,
    pub pad_ms: f64,
    pub utterances_per_class: usize,
    pub train_utterances: usize,
    pub visual_pool: usize,
    /// Allow lateral synapses inside each population, not only between them.
    pub within_lateral: bool,
    pub b: f64,
    pub gamma: f64,
    pub param_interval_ms: f64,
    /// Plastic training time before the first lesion.
    pub train_s: f64,
    /// Plastic time after each lesion.
    pub recovery_s: f64,
    pub eval_every_s: f64,
    /// Audio-only trials per readout evaluation.
    pub eval_trials: usize,
    /// Audio-only trials per class for the lesion-1 PETHs.
    pub peth_trials: usize,
    pub encode_factor: f64,
    pub readout_lambda: f64,
    pub seed: u64,
}

impl Default for CompensationConfig {
    fn default() -> Self {
        Self {
            circuits: 4,
            circuit_size: 10,
            frame_ms: 40.0,
            min_frames: 8,
            max_frames: 13,
            pad_ms: 25.0,
            utterances_per_class: 10,
            train_utterances: 7,
            visual_pool: 50,
            within_lateral: true,
            b: 2e-3,
            gamma: -0.05,
            param_interval_ms: 100.0,
            train_s: 1200.0,
            recovery_s: 800.0,
            eval_every_s: 400.0,
            eval_trials: 100,
            peth_trials: 50,
            encode_factor: 2.0,
            readout_lambda: 1.0,
            seed: 29,
        }
    }
}

/// One audio-only test of `z_V`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Evaluation {
    /// Fraction of trials whose reconstruction is closest to the right class mean.
    pub accuracy: f64,
    /// Mean Pearson correlation of a trial's reconstruction with its own class mean.
    pub correlation: f64,
    /// Two-fold cross-validated linear readout of window spike counts.
    pub linear_accuracy: f64,
    /// Mean reconstruction per class, 8×8 row-major in `[0, 1]`.
    pub images: [Vec<f64>; 2],
}

/// Accuracy around one lesion.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LesionOutcome {
    pub time_s: f64,
    pub targets: usize,
    pub before: f64,
    pub after: f64,
    /// Best accuracy during the recovery period.
    pub recovered: f64,
    /// First evaluation reaching 75% of `before`, seconds after the lesion.
    pub recovery_time_s: Option<f64>,
}

impl LesionOutcome {
    pub fn drop(&self) -> f64 {
        self.before - self.after
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
enum Stage {
    Train,
    Recover1,
    Recover2,
    Done,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Compensation {
    pub cfg: CompensationConfig,
    /// Per class, per utterance, one audio rate vector per frame.
    utterances: Vec<Vec<Vec<Vec<f64>>>>,
    visual: Vec<Vec<Vec<f64>>>,
    stage: Stage,
    stage_start_ms: f64,
    next_eval_ms: f64,
    lesions: Vec<LesionSpec>,
    outcomes: Vec<LesionOutcome>,
    last_accuracy: f64,
    evals: u64,
    last_eval: Option<Evaluation>,
    /// Lateral `θ` at every evaluation, for the trajectory PCA.
    snapshots: Vec<(f64, Vec<f64>)>,
    rng: ChainRng,
    sim: Simulator,
    log: ExperimentLog,
}

impl Compensation {
    pub fn new(cfg: CompensationConfig) -> Result<Self> {
        ensure!(cfg.circuits >= 1 && cfg.circuit_size >= 2, "need circuits of at least two neurons");
        ensure!(cfg.min_frames >= 2 && cfg.min_frames <= cfg.max_frames, "bad frame range");
        ensure!(
            cfg.train_utterances >= 1 && cfg.train_utterances < cfg.utterances_per_class,
            "need both training and test utterances"
        );
        ensure!(cfg.visual_pool >= 1, "visual pool is empty");
        ensure!(cfg.eval_trials >= 8 && cfg.eval_trials % 4 == 0, "eval_trials must be a multiple of 4, >= 8");
        ensure!(cfg.peth_trials >= 1, "peth_trials must be >= 1");
        ensure!(cfg.eval_every_s > 0.0 && cfg.train_s >= cfg.eval_every_s && cfg.recovery_s >= cfg.eval_every_s, "bad timing");
        let mut rng = ChainRng::with_stream(cfg.seed, 0);
        let mut utterances = Vec::new();
        let mut visual = Vec::new();
        for c in 0..2 {
            let mut u = Vec::new();
            for _ in 0..cfg.utterances_per_class {
                let frames = cfg.min_frames + rng.index(cfg.max_frames - cfg.min_frames + 1);
                u.push(auditory_trial(c, frames, &mut rng)?);
            }
            utterances.push(u);
            visual.push(digit_pool(c + 1, cfg.visual_pool, &mut rng)?.iter().map(|g| encode_gray8(g)).collect());
        }
        let pop = cfg.circuits * cfg.circuit_size;
        let n_in = AUDIO_INPUTS + VISUAL_INPUTS;
        let topology = Topology {
            n_inputs: n_in,
            circuits: vec![cfg.circuit_size; 2 * cfg.circuits],
            projections: if cfg.within_lateral {
                vec![
                    Projection { source_start: 0, source_end: AUDIO_INPUTS, target_start: 0, target_end: pop },
                    Projection { source_start: AUDIO_INPUTS, source_end: n_in, target_start: pop, target_end: 2 * pop },
                    Projection { source_start: n_in, source_end: n_in + 2 * pop, target_start: 0, target_end: 2 * pop },
                ]
            } else {
                vec![
                    Projection { source_start: 0, source_end: AUDIO_INPUTS, target_start: 0, target_end: pop },
                    Projection { source_start: AUDIO_INPUTS, source_end: n_in, target_start: pop, target_end: 2 * pop },
                    Projection { source_start: n_in + pop, source_end: n_in + 2 * pop, target_start: 0, target_end: pop },
                    Projection { source_start: n_in, source_end: n_in + pop, target_start: pop, target_end: 2 * pop },
                ]
            },
        };
        let params = WtaParams { gamma: cfg.gamma, ..WtaParams::default() };
        let net = WtaNetwork::new(params, topology, &PriorSpec::WTA, &mut rng)?;
        let plasticity = Plasticity { b: cfg.b, param_interval_ms: cfg.param_interval_ms, ..Plasticity::default() };
        let sim = Simulator::new(net, plasticity, cfg.seed)?;
        let rng = ChainRng::with_stream(cfg.seed, 1);
        Ok(Self {
            log: ExperimentLog::new("wta-lesion", cfg.seed),
            next_eval_ms: cfg.eval_every_s * 1000.0,
            cfg,
            utterances,
            visual,
            stage: Stage::Train,
            stage_start_ms: 0.0,
            lesions: Vec::new(),
            outcomes: Vec::new(),
            last_accuracy: f64::NAN,
            evals: 0,
            last_eval: None,
            snapshots: Vec::new(),
            rng,
            sim,
        })
    }

    pub fn simulator(&self) -> &Simulator {
        &self.sim
    }

    pub fn outcomes(&self) -> &[LesionOutcome] {
        &self.outcomes
    }

    /// Most recent evaluation.
    pub fn last_evaluation(&self) -> Option<&Evaluation> {
        self.last_eval.as_ref()
    }

    pub fn lesions(&self) -> &[LesionSpec] {
        &self.lesions
    }

    fn population(&self) -> usize {
        self.cfg.circuits * self.cfg.circuit_size
    }

    /// Segments of one trial and the stimulus window relative to its start.
    fn trial(&self, class: usize, utt: usize, visual: Option<usize>) -> (Vec<Segment>, f64, f64) {
        let n_in = AUDIO_INPUTS + VISUAL_INPUTS;
        let pad = Segment { duration_ms: self.cfg.pad_ms, rates: vec![NOISE_RATE_HZ; n_in], label: None };
        let mut segs = vec![pad.clone()];
        for frame in &self.utterances[class][utt] {
            let mut rates = frame.clone();
            match visual {
                Some(v) => rates.extend_from_slice(&self.visual[class][v]),
                None => rates.extend(core::iter::repeat(NOISE_RATE_HZ).take(VISUAL_INPUTS)),
            }
            segs.push(Segment { duration_ms: self.cfg.frame_ms, rates, label: Some(class as u32 + 1) });
        }
        segs.push(pad);
        let len = self.utterances[class][utt].len() as f64 * self.cfg.frame_ms;
        (segs, self.cfg.pad_ms, self.cfg.pad_ms + len)
    }

    fn train_until(&mut self, until_ms: f64) -> Result<()> {
        let mut segs = Vec::new();
        let mut t = self.sim.time_ms();
        while t < until_ms - 1e-9 {
            let class = self.rng.index(2);
            let utt = self.rng.index(self.cfg.train_utterances);
            let v = self.rng.index(self.cfg.visual_pool);
            let (s, _, _) = self.trial(class, utt, Some(v));
            t += s.iter().map(|g| g.duration_ms).sum::<f64>();
            segs.extend(s);
        }
        if !segs.is_empty() {
            run_segments(&mut self.sim, segs)?;
        }
        Ok(())
    }

    /// Audio-only test trials on a frozen copy: spikes, stimulus windows and classes.
    fn probe(&self, classes: &[usize], stream: u64) -> Result<(Vec<SpikeEvent>, Vec<(f64, f64)>)> {
        self.probe_with(classes, stream, false)
    }

    fn probe_with(&self, classes: &[usize], stream: u64, visual: bool) -> Result<(Vec<SpikeEvent>, Vec<(f64, f64)>)> {
        let mut s = self.sim.clone();
        s.set_plasticity_enabled(false);
        *s.rng_mut() = ChainRng::with_stream(self.cfg.seed, stream);
        let n_test = self.cfg.utterances_per_class - self.cfg.train_utterances;
        let mut t = s.time_ms();
        let mut segs = Vec::new();
        let mut windows = Vec::new();
        for (i, &c) in classes.iter().enumerate() {
            let v = if visual { Some(i % self.cfg.visual_pool) } else { None };
            let (g, a, b) = self.trial(c, self.cfg.train_utterances + (i / 2) % n_test, v);
            windows.push((t + a, t + b));
            t += g.iter().map(|x| x.duration_ms).sum::<f64>();
            segs.extend(g);
        }
        let events = run_segments(&mut s, segs)?;
        Ok((events, windows))
    }

    /// Mean visual rate vector of each class's training images.
    pub fn class_means(&self) -> [Vec<f64>; 2] {
        let mean = |pool: &[Vec<f64>]| {
            let mut m = vec![0.0; VISUAL_INPUTS];
            for p in pool {
                for (a, v) in m.iter_mut().zip(p) {
                    *a += v / pool.len() as f64;
                }
            }
            m
        };
        [mean(&self.visual[0]), mean(&self.visual[1])]
    }

    /// Effective weights from the visual inputs onto `z_V`, one row per neuron.
    pub fn visual_efficacy(&self) -> Matrix {
        let net = self.sim.network();
        let pop = self.population();
        let mut m = Matrix::zeros(pop, VISUAL_INPUTS);
        for k in 0..pop {
            for j in 0..VISUAL_INPUTS {
                if let Some(s) = net.find_synapse(AUDIO_INPUTS + j, pop + k) {
                    *m.get_mut(k, j) = net.w_hat()[s];
                }
            }
        }
        m
    }

    /// Audio-only test of `z_V` on a frozen copy.
    pub fn evaluate(&mut self) -> Result<Evaluation> {
        let pop = self.population();
        self.evals += 1;
        let classes: Vec<usize> = (0..self.cfg.eval_trials).map(|i| i % 2).collect();
        let (events, windows) = self.probe(&classes, 1000 + self.evals)?;
        let sel: Vec<SpikeEvent> = events
            .iter()
            .filter(|e| e.neuron as usize >= pop)
            .map(|e| SpikeEvent { neuron: e.neuron - pop as u32, time_ms: e.time_ms })
            .collect();
        let f = window_counts(&sel, pop, &windows);
        let h = classes.len() / 2;
        let a = train_eval_readout(&f[..h], &classes[..h], &f[h..], &classes[h..], self.cfg.readout_lambda)?;
        let b = train_eval_readout(&f[h..], &classes[h..], &f[..h], &classes[..h], self.cfg.readout_lambda)?;
        let eff = self.visual_efficacy();
        let means = self.class_means();
        let (mut hits, mut corr) = (0usize, 0.0);
        let mut images = [vec![0.0; VISUAL_INPUTS], vec![0.0; VISUAL_INPUTS]];
        for (counts, &c) in f.iter().zip(&classes) {
            let img = reconstruct_stimulus(counts, &eff)?;
            for (a, v) in images[c].iter_mut().zip(&img) {
                *a += 2.0 * v / classes.len() as f64;
            }
            let r = [pearson(&img, &means[0]), pearson(&img, &means[1])];
            if r[c] > r[1 - c] {
                hits += 1;
            }
            corr += r[c] / classes.len() as f64;
        }
        Ok(Evaluation {
            accuracy: hits as f64 / classes.len() as f64,
            correlation: corr,
            linear_accuracy: 0.5 * (a.accuracy + b.accuracy),
            images,
        })
    }

    /// Mean audio-only firing rate (Hz) of every hidden neuron, per class.
    pub fn class_rates(&self) -> Result<[Vec<f64>; 2]> {
        self.class_rates_with(false)
    }

    pub fn class_rates_with(&self, visual: bool) -> Result<[Vec<f64>; 2]> {
        let n = 2 * self.population();
        let mut rates: [Vec<f64>; 2] = Default::default();
        for (c, out) in rates.iter_mut().enumerate() {
            let classes = vec![c; self.cfg.peth_trials];
            let (events, windows) = self.probe_with(&classes, 500 + c as u64, visual)?;
            let onsets: Vec<f64> = windows.iter().map(|w| w.0).collect();
            let span = windows.iter().map(|w| w.1 - w.0).fold(0.0, f64::max);
            let p = peth(&events, n, &onsets, span, 50.0, 10.0)?;
            *out = (0..n).map(|k| p.mean_rate(k)).collect();
        }
        Ok(rates)
    }

    /// `z_V` neurons whose audio-only class-2 rate is at least
    /// `encode_factor` times their class-1 rate.
    pub fn select_lesion1(&self) -> Result<Vec<usize>> {
        let pop = self.population();
        let [r1, r2] = self.class_rates()?;
        Ok(select_encoding_neurons(&r1, &r2, self.cfg.encode_factor, pop..2 * pop))
    }

    fn record_eval(&mut self, e: &Evaluation, tag: f64) -> Result<()> {
        let net = self.sim.network();
        let lat: Vec<f64> = (0..net.n_synapses()).filter(|&s| net.is_lateral(s)).map(|s| net.theta()[s]).collect();
        self.snapshots.push((self.sim.time_ms() / 1000.0, lat));
        self.last_eval = Some(e.clone());
        let pop = self.population();
        let lateral = functional_lateral(net, 0..2 * pop, 0..2 * pop, false).len() as f64;
        self.log.record(
            "readout",
            &["time_s", "stage", "accuracy", "correlation", "linear_accuracy", "active", "lateral_active"],
            &[self.sim.time_ms() / 1000.0, tag, e.accuracy, e.correlation, e.linear_accuracy, net.active_synapse_count() as f64, lateral],
        )
    }

    fn lesion(&mut self, kind: LesionKind) -> Result<()> {
        let pop = self.population();
        let targets = match kind {
            LesionKind::RemoveNeurons => self.select_lesion1()?,
            LesionKind::RemoveConnectionsBanRegrowth => functional_lateral(self.sim.network(), 0..2 * pop, 0..2 * pop, false),
        };
        let spec = LesionSpec { kind, targets, time_ms: self.sim.time_ms() };
        apply_lesion(self.sim.network_mut(), &spec)?;
        self.log.event(spec.time_ms, if kind == LesionKind::RemoveNeurons { "lesion1" } else { "lesion2" }, &format!("{} targets", spec.targets.len()));
        let before = self.last_accuracy;
        let e = self.evaluate()?;
        self.record_eval(&e, self.lesions.len() as f64 + 1.5)?;
        let after = e.accuracy;
        self.outcomes.push(LesionOutcome {
            time_s: spec.time_ms / 1000.0,
            targets: spec.targets.len(),
            before,
            after,
            recovered: after,
            recovery_time_s: None,
        });
        self.lesions.push(spec);
        self.last_accuracy = after;
        Ok(())
    }
}

impl Experiment for Compensation {
    /// One chunk trains up to the next evaluation time, evaluates there and
    /// applies a lesion at the end of a stage.
    fn advance(&mut self) -> Result<bool> {
        if self.stage == Stage::Done {
            return Ok(true);
        }
        let target = self.next_eval_ms;
        self.train_until(target)?;
        let e = self.evaluate()?;
        let acc = e.accuracy;
        let tag = match self.stage {
            Stage::Train => 0.0,
            Stage::Recover1 => 1.0,
            _ => 2.0,
        };
        self.record_eval(&e, tag)?;
        self.last_accuracy = acc;
        if let Some(o) = self.outcomes.last_mut() {
            if self.stage != Stage::Train {
                o.recovered = o.recovered.max(acc);
                if o.recovery_time_s.is_none() && acc >= 0.75 * o.before {
                    o.recovery_time_s = Some(self.sim.time_ms() / 1000.0 - o.time_s);
                }
            }
        }
        self.next_eval_ms += self.cfg.eval_every_s * 1000.0;
        let span = if self.stage == Stage::Train { self.cfg.train_s } else { self.cfg.recovery_s };
        if self.sim.time_ms() + 1e-6 < self.stage_start_ms + span * 1000.0 {
            return Ok(false);
        }
        self.stage_start_ms = self.sim.time_ms();
        self.next_eval_ms = self.stage_start_ms + self.cfg.eval_every_s * 1000.0;
        self.stage = match self.stage {
            Stage::Train => {
                self.lesion(LesionKind::RemoveNeurons)?;
                Stage::Recover1
            }
            Stage::Recover1 => {
                self.lesion(LesionKind::RemoveConnectionsBanRegrowth)?;
                Stage::Recover2
            }
            _ => Stage::Done,
        };
        if self.stage == Stage::Done {
            let snaps: Vec<Vec<f64>> = self.snapshots.iter().map(|s| s.1.clone()).collect();
            let k = 3.min(snaps.len() - 1);
            let pca = pca_trajectory(&snaps, k)?;
            for ((t, _), p) in self.snapshots.iter().zip(&pca.projections) {
                let mut row = vec![*t];
                row.extend(p.iter().copied().chain(core::iter::repeat(0.0)).take(3));
                self.log.record("theta_pca", &["time_s", "pc1", "pc2", "pc3"], &row)?;
            }
            for (i, o) in self.outcomes.iter().enumerate() {
                self.log.record(
                    "lesion_outcome",
                    &["lesion", "time_s", "targets", "before", "after", "recovered", "recovery_time_s"],
                    &[(i + 1) as f64, o.time_s, o.targets as f64, o.before, o.after, o.recovered, o.recovery_time_s.unwrap_or(f64::NAN)],
                )?;
            }
            return Ok(true);
        }
        Ok(false)
    }

    fn log(&self) -> &ExperimentLog {
        &self.log
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> CompensationConfig {
        CompensationConfig {
            circuits: 1,
            circuit_size: 4,
            min_frames: 2,
            max_frames: 3,
            utterances_per_class: 3,
            train_utterances: 2,
            visual_pool: 2,
            b: 0.01,
            train_s: 2.0,
            recovery_s: 1.0,
            eval_every_s: 1.0,
            eval_trials: 8,
            peth_trials: 4,
            encode_factor: 1.0,
            ..CompensationConfig::default()
        }
    }

    #[test]
    fn topology_and_trials() {
        let e = Compensation::new(tiny()).unwrap();
        let net = e.simulator().network();
        assert_eq!(net.n_inputs(), 770 + 64);
        assert_eq!(net.n_hidden(), 8);
        // audio reaches z_A only, visual reaches z_V only, laterals everywhere
        assert!(net.find_synapse(0, 0).is_some() && net.find_synapse(0, 4).is_none());
        assert!(net.find_synapse(770, 4).is_some() && net.find_synapse(770, 0).is_none());
        assert!(net.find_synapse(834 + 5, 1).is_some() && net.find_synapse(834 + 1, 2).is_some());
        let (segs, a, b) = e.trial(1, 0, None);
        assert_eq!(segs.len(), e.utterances[1][0].len() + 2);
        assert_eq!(a, 25.0);
        assert_eq!(b - a, 40.0 * e.utterances[1][0].len() as f64);
        assert!(segs[1].rates[770..].iter().all(|&r| r == NOISE_RATE_HZ));
        let between = Compensation::new(CompensationConfig { within_lateral: false, ..tiny() }).unwrap();
        let net = between.simulator().network();
        assert!(net.find_synapse(834 + 5, 1).is_some() && net.find_synapse(834 + 1, 2).is_none());
    }

    #[test]
    fn class_means_match_the_pools() {
        let e = Compensation::new(tiny()).unwrap();
        let m = e.class_means();
        for c in 0..2 {
            let v = &e.visual[c];
            assert!((m[c][10] - 0.5 * (v[0][10] + v[1][10])).abs() < 1e-12);
        }
        assert_eq!(e.visual_efficacy().rows(), 4);
    }

    #[test]
    fn full_protocol_runs_and_is_deterministic() {
        let run = || {
            let mut e = Compensation::new(tiny()).unwrap();
            let mut chunks = 1;
            while !e.advance().unwrap() {
                chunks += 1;
            }
            (chunks, e)
        };
        let (chunks, e) = run();
        assert_eq!(chunks, 4);
        assert_eq!(e.lesions().len(), 2);
        assert_eq!(e.outcomes().len(), 2);
        for o in e.outcomes() {
            assert!((0.0..=1.0).contains(&o.after) && o.recovered >= o.after);
        }
        let rows = &e.log().metric("readout").unwrap().rows;
        assert_eq!(rows.len(), 6);
        assert!(e.log().metric("lesion_outcome").is_some());
        assert_eq!(e.log().metric("theta_pca").unwrap().rows.len(), 6);
        assert_eq!(e.log(), run().1.log());
    }

    #[test]
    fn bad_configs_are_rejected() {
        assert!(Compensation::new(CompensationConfig { train_utterances: 3, ..tiny() }).is_err());
        assert!(Compensation::new(CompensationConfig { eval_trials: 6, ..tiny() }).is_err());
        assert!(Compensation::new(CompensationConfig { min_frames: 4, ..tiny() }).is_err());
        assert!(Compensation::new(CompensationConfig { recovery_s: 0.5, ..tiny() }).is_err());
    }
}
