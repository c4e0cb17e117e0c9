use alloc::vec;
use alloc::vec::Vec;

use crate::error::{ensure, Error, Result};
use crate::math;
use crate::wta::WtaNetwork;

/// Lifetime of one newly formed synapse.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SurvivalRecord {
    pub synapse: usize,
    /// Time `θ` crossed 0 upward.
    pub birth_ms: f64,
    /// Next downward crossing, `None` if still alive (censored).
    pub death_ms: Option<f64>,
}

/// Watches functional flags and records births and deaths. Synapses that
/// are functional when tracking starts have unknown birth and are ignored
/// until they retract and regrow.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SurvivalTracker {
    functional: Vec<bool>,
    open: Vec<Option<usize>>,
    records: Vec<SurvivalRecord>,
}

impl SurvivalTracker {
    pub fn new(net: &WtaNetwork) -> Self {
        let functional = (0..net.n_synapses()).map(|s| net.theta()[s] > 0.0).collect();
        Self { functional, open: vec![None; net.n_synapses()], records: Vec::new() }
    }

    pub fn observe(&mut self, net: &WtaNetwork, time_ms: f64) {
        for (s, &th) in net.theta().iter().enumerate() {
            let now = th > 0.0;
            if now == self.functional[s] {
                continue;
            }
            self.functional[s] = now;
            if now {
                self.open[s] = Some(self.records.len());
                self.records.push(SurvivalRecord { synapse: s, birth_ms: time_ms, death_ms: None });
            } else if let Some(i) = self.open[s].take() {
                self.records[i].death_ms = Some(time_ms);
            }
        }
    }

    pub fn records(&self) -> &[SurvivalRecord] {
        &self.records
    }
}

/// Surviving fraction of synapses born in `window` as a function of age.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SurvivalCurve {
    pub ages_ms: Vec<f64>,
    pub fraction: Vec<f64>,
    pub births: usize,
    pub deaths: usize,
}

pub const MIN_BIRTHS: usize = 20;

/// Kaplan-Meier estimate on the requested ages. Records alive at `end_ms`
/// are censored at age `end_ms − birth`.
pub fn survival_curve(records: &[SurvivalRecord], window_ms: (f64, f64), end_ms: f64, ages_ms: &[f64]) -> Result<SurvivalCurve> {
    let mut events: Vec<(f64, bool)> = records
        .iter()
        .filter(|r| r.birth_ms >= window_ms.0 && r.birth_ms < window_ms.1)
        .map(|r| match r.death_ms {
            Some(d) if d <= end_ms => (d - r.birth_ms, true),
            _ => (end_ms - r.birth_ms, false),
        })
        .collect();
    if events.len() < MIN_BIRTHS {
        return Err(Error::Statistics { count: events.len(), required: MIN_BIRTHS });
    }
    // deaths before censorings at equal age
    events.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(b.1.cmp(&a.1)));
    let births = events.len();
    let deaths = events.iter().filter(|e| e.1).count();
    let mut steps: Vec<(f64, f64)> = Vec::new();
    let mut at_risk = births as f64;
    let mut s = 1.0;
    let mut i = 0;
    while i < events.len() {
        let age = events[i].0;
        let mut d = 0.0;
        let mut c = 0.0;
        while i < events.len() && events[i].0 == age {
            if events[i].1 {
                d += 1.0;
            } else {
                c += 1.0;
            }
            i += 1;
        }
        if d > 0.0 {
            s *= 1.0 - d / at_risk;
            steps.push((age, s));
        }
        at_risk -= d + c;
    }
    let fraction = ages_ms
        .iter()
        .map(|&a| steps.iter().take_while(|(t, _)| *t <= a).last().map_or(1.0, |p| p.1))
        .collect();
    Ok(SurvivalCurve { ages_ms: ages_ms.to_vec(), fraction, births, deaths })
}

/// Least-squares line `log10 y = intercept + exponent·log10 t`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PowerLawFit {
    pub exponent: f64,
    pub intercept: f64,
    pub r2: f64,
}

impl PowerLawFit {
    pub fn eval(&self, t: f64) -> f64 {
        libm::pow(10.0, self.intercept + self.exponent * libm::log10(t))
    }

    /// Age at which the fitted curve falls to `level`.
    pub fn time_at(&self, level: f64) -> f64 {
        libm::pow(10.0, (libm::log10(level) - self.intercept) / self.exponent)
    }
}

pub fn fit_power_law(t: &[f64], y: &[f64]) -> Result<PowerLawFit> {
    ensure!(t.len() == y.len(), "length mismatch");
    ensure!(t.len() >= 5, "need >= 5 points, got {}", t.len());
    ensure!(t.iter().chain(y).all(|&v| v > 0.0 && v.is_finite()), "power-law fit needs positive values");
    let lo = t.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = t.iter().cloned().fold(0.0, f64::max);
    ensure!(hi / lo >= 10.0 - 1e-9, "points must span at least one decade");
    let lx: Vec<f64> = t.iter().map(|&v| libm::log10(v)).collect();
    let ly: Vec<f64> = y.iter().map(|&v| libm::log10(v)).collect();
    let mx = math::mean(&lx);
    let my = math::mean(&ly);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = ly.iter().map(|b| (b - my) * (b - my)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(PowerLawFit { exponent, intercept, r2 })
}

/// `n` log-spaced points in `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (libm::log10(lo), libm::log10(hi));
    (0..n).map(|i| libm::pow(10.0, a + (b - a) * i as f64 / (n - 1).max(1) as f64)).collect()
}
