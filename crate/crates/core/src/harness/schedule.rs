use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{ensure, Error, Result};
use crate::rng::ChainRng;
use crate::wta::Simulator;

/// Rate of a fully white pixel above the noise floor, Hz.
pub const MAX_PIXEL_RATE_HZ: f64 = 50.0;
/// Background Poisson noise on every input, Hz.
pub const NOISE_RATE_HZ: f64 = 1.0;
pub const PATTERN_MS: f64 = 200.0;
pub const GAP_MS: f64 = 50.0;

/// Gray levels 0..=255 to Poisson rates `50·g/255 + 1` Hz.
pub fn encode_image(gray: &[f64]) -> Result<Vec<f64>> {
    gray.iter()
        .map(|&g| {
            if (0.0..=255.0).contains(&g) {
                Ok(MAX_PIXEL_RATE_HZ * g / 255.0 + NOISE_RATE_HZ)
            } else {
                Err(Error::Argument(alloc::format!("gray value {g} outside 0..=255")))
            }
        })
        .collect()
}

pub fn encode_gray8(gray: &[u8]) -> Vec<f64> {
    gray.iter().map(|&g| MAX_PIXEL_RATE_HZ * g as f64 / 255.0 + NOISE_RATE_HZ).collect()
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Segment {
    pub duration_ms: f64,
    pub rates: Vec<f64>,
    /// Class of the pattern shown, `None` for gaps.
    pub label: Option<u32>,
}

#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InputSchedule {
    pub segments: Vec<Segment>,
    /// Start time of each phase after the first.
    pub phase_boundaries_ms: Vec<f64>,
    pub phase_labels: Vec<String>,
}

impl InputSchedule {
    pub fn push(&mut self, duration_ms: f64, rates: Vec<f64>, label: Option<u32>) {
        self.segments.push(Segment { duration_ms, rates, label });
    }

    pub fn total_duration_ms(&self) -> f64 {
        self.segments.iter().map(|s| s.duration_ms).sum()
    }

    /// Start times of all segments.
    pub fn onsets_ms(&self) -> Vec<f64> {
        let mut t = 0.0;
        self.segments
            .iter()
            .map(|s| {
                let t0 = t;
                t += s.duration_ms;
                t0
            })
            .collect()
    }

    /// Checks widths and that every segment spans a whole number of steps.
    pub fn validate(&self, n_inputs: usize, dt_ms: f64) -> Result<()> {
        ensure!(!self.segments.is_empty(), "schedule has no segments");
        for (i, s) in self.segments.iter().enumerate() {
            ensure!(s.duration_ms > 0.0, "segment {i}: duration must be > 0");
            let k = s.duration_ms / dt_ms;
            ensure!((k - libm::round(k)).abs() < 1e-9, "segment {i}: duration {} ms is not a multiple of dt", s.duration_ms);
            ensure!(s.rates.len() == n_inputs, "segment {i}: {} rates for {n_inputs} inputs", s.rates.len());
            ensure!(s.rates.iter().all(|r| r.is_finite() && *r >= 0.0), "segment {i}: rates must be >= 0");
        }
        ensure!(
            self.phase_boundaries_ms.windows(2).all(|w| w[0] < w[1]),
            "phase boundaries must be strictly increasing"
        );
        Ok(())
    }
}

/// Patterns of one class available to a phase.
#[derive(Clone, Debug, PartialEq)]
pub struct Pool {
    pub label: u32,
    pub patterns: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSpec {
    pub label: String,
    pub pools: Vec<Pool>,
    pub presentations: usize,
}

/// Random presentations (pattern for [`PATTERN_MS`], then [`GAP_MS`] of
/// noise) drawn uniformly from the union of each phase's pools.
pub fn build_phase_schedule(phases: &[PhaseSpec], rng: &mut ChainRng) -> Result<InputSchedule> {
    ensure!(!phases.is_empty(), "no phases");
    let mut out = InputSchedule::default();
    let mut width = None;
    let mut t = 0.0;
    for (pi, ph) in phases.iter().enumerate() {
        let union: Vec<(u32, &Vec<f64>)> =
            ph.pools.iter().flat_map(|p| p.patterns.iter().map(move |x| (p.label, x))).collect();
        ensure!(!union.is_empty(), "phase {} has no patterns", ph.label);
        let n = *width.get_or_insert(union[0].1.len());
        ensure!(union.iter().all(|(_, x)| x.len() == n), "phase {}: pattern widths differ", ph.label);
        if pi > 0 {
            out.phase_boundaries_ms.push(t);
        }
        out.phase_labels.push(ph.label.clone());
        for _ in 0..ph.presentations {
            let (label, x) = union[rng.index(union.len())];
            out.push(PATTERN_MS, x.clone(), Some(label));
            out.push(GAP_MS, vec![NOISE_RATE_HZ; n], None);
            t += PATTERN_MS + GAP_MS;
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpikeEvent {
    pub neuron: u32,
    pub time_ms: f64,
}

/// Steps `sim` through `schedule` from its current time. The schedule is
/// laid out from t = 0, so a simulator at time `t` resumes mid-schedule.
/// `observe` runs after every step with the index of the active segment.
pub fn simulate(
    sim: &mut Simulator,
    schedule: &InputSchedule,
    until_ms: f64,
    mut observe: impl FnMut(&Simulator, usize),
) -> Result<Vec<SpikeEvent>> {
    let dt = sim.network().params.dt_ms;
    schedule.validate(sim.network().n_inputs(), dt)?;
    ensure!(
        until_ms <= schedule.total_duration_ms() + 1e-9,
        "schedule ends at {} ms, requested {until_ms} ms",
        schedule.total_duration_ms()
    );
    let mut events = Vec::new();
    let mut seg_end = 0.0;
    let mut current = usize::MAX;
    for (i, s) in schedule.segments.iter().enumerate() {
        seg_end += s.duration_ms;
        if sim.time_ms() + 1e-9 < seg_end {
            current = i;
            break;
        }
    }
    if current == usize::MAX {
        return Ok(events);
    }
    let mut loaded = usize::MAX;
    while sim.time_ms() + 0.5 * dt < until_ms {
        while sim.time_ms() + 0.5 * dt >= seg_end {
            current += 1;
            seg_end += schedule.segments[current].duration_ms;
        }
        if loaded != current {
            sim.set_input_rates(&schedule.segments[current].rates)?;
            loaded = current;
        }
        sim.step()?;
        let t = sim.time_ms();
        events.extend(sim.spikes().iter().map(|&k| SpikeEvent { neuron: k, time_ms: t }));
        observe(sim, current);
    }
    Ok(events)
}

/// Runs `segments` back to back starting at the simulator's current time.
pub fn run_segments(sim: &mut Simulator, segments: Vec<Segment>) -> Result<Vec<SpikeEvent>> {
    ensure!(!segments.is_empty(), "no segments to run");
    let t0 = sim.time_ms();
    let mut s = InputSchedule::default();
    if t0 > 0.0 {
        s.push(t0, vec![NOISE_RATE_HZ; sim.network().n_inputs()], None);
    }
    s.segments.extend(segments);
    let end = s.total_duration_ms();
    simulate(sim, &s, end, |_, _| {})
}

/// A pattern shown for [`PATTERN_MS`] followed by [`GAP_MS`] of noise.
pub fn presentation(rates: &[f64], label: u32) -> [Segment; 2] {
    [
        Segment { duration_ms: PATTERN_MS, rates: rates.to_vec(), label: Some(label) },
        Segment { duration_ms: GAP_MS, rates: vec![NOISE_RATE_HZ; rates.len()], label: None },
    ]
}
