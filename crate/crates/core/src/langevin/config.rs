use alloc::vec::Vec;

use crate::error::{ensure, Result};
use crate::math;

/// The sampled parameter vector plus its clock.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParameterState {
    pub values: Vec<f64>,
    pub step_count: u64,
    /// Simulated time in the same unit as [`SamplerConfig::dt`].
    pub time: f64,
}

impl ParameterState {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values, step_count: 0, time: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Shape of the sampling speed `b(θ) = b₀ · s(θ)`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum SpeedProfile {
    #[default]
    Constant,
    /// `s(θ) = 1 + amplitude · tanh θ`, positive for `|amplitude| < 1`.
    Tanh { amplitude: f64 },
}

impl SpeedProfile {
    /// `(b(θ), b′(θ))` for base rate `base`.
    #[inline]
    pub fn eval(&self, base: f64, theta: f64) -> (f64, f64) {
        match *self {
            SpeedProfile::Constant => (base, 0.0),
            SpeedProfile::Tanh { amplitude } => {
                let t = math::tanh(theta);
                (base * (1.0 + amplitude * t), base * amplitude * (1.0 - t * t))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SamplerConfig {
    /// Base sampling speed `b` (inverse time units).
    pub learning_rate_b: f64,
    pub temperature: f64,
    /// Dataset-size factor `N` applied to per-input likelihood gradients.
    pub dataset_size: u32,
    pub dt: f64,
    pub clip: Option<(f64, f64)>,
    /// Cap on `|Δθᵢ|` per update.
    pub max_step: Option<f64>,
    pub seed: u64,
    pub speed: SpeedProfile,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            learning_rate_b: 1e-3,
            temperature: 1.0,
            dataset_size: 1,
            dt: 0.1,
            clip: None,
            max_step: None,
            seed: 0,
            speed: SpeedProfile::Constant,
        }
    }
}

impl SamplerConfig {
    /// Learning rate `η = b·Δt` of the discrete rule.
    pub fn eta(&self) -> f64 {
        self.learning_rate_b * self.dt
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.learning_rate_b > 0.0 && self.learning_rate_b.is_finite(),
            "learning rate b must be > 0, got {}",
            self.learning_rate_b
        );
        ensure!(self.temperature >= 0.0 && self.temperature.is_finite(), "temperature must be >= 0");
        ensure!(self.dataset_size >= 1, "dataset size N must be >= 1");
        ensure!(self.dt > 0.0 && self.dt.is_finite(), "dt must be > 0, got {}", self.dt);
        if let Some((lo, hi)) = self.clip {
            ensure!(lo < hi, "clip bounds must satisfy lo < hi, got [{lo}, {hi}]");
        }
        if let Some(m) = self.max_step {
            ensure!(m > 0.0, "max_step must be > 0");
        }
        if let SpeedProfile::Tanh { amplitude } = self.speed {
            ensure!(amplitude.abs() < 1.0, "tanh speed amplitude must satisfy |a| < 1 to keep b(θ) > 0");
        }
        Ok(())
    }
}
