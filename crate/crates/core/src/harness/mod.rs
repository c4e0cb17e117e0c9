//! Experiment protocols and their metrics at desk scale.
//!
//! Every protocol implements [`Experiment`]: a deterministic sequence of
//! chunks whose full state can be serialized between chunks, so a run can
//! be checkpointed and resumed bit-identically.

mod adapt;
mod analysis;
mod compensation;
mod fixed_point;
mod lesion;
mod log;
pub mod patterns;
mod posterior;
mod rbm_gen;
mod readout;
mod schedule;
mod survival;
mod survival_stats;

pub use adapt::{AdaptSummary, WtaAdaptConfig, WtaAdaptation};
pub use analysis::{pca_trajectory, peth, reconstruct_stimulus, Pca, Peth};
pub use compensation::{Compensation, CompensationConfig, Evaluation, LesionOutcome};
pub use fixed_point::{FixedPoint, FixedPointConfig, FixedPointReport, SynapseBalance};
pub use lesion::{apply_lesion, functional_lateral, select_encoding_neurons, LesionKind, LesionSpec};
pub use log::{ExperimentLog, LogEvent, MetricTable};
pub use posterior::{CheckResult, PosteriorSuite, PosteriorSuiteConfig};
pub use rbm_gen::{log_checkpoints, RbmGenConfig, RbmGenSummary, RbmGeneralization};
pub use readout::{lowpass_features, train_eval_readout, window_counts, ReadoutModel, ReadoutScore};
pub use schedule::{
    build_phase_schedule, encode_gray8, encode_image, presentation, run_segments, simulate, InputSchedule, PhaseSpec, Pool, Segment, SpikeEvent,
    GAP_MS, MAX_PIXEL_RATE_HZ, NOISE_RATE_HZ, PATTERN_MS,
};
pub use survival_stats::{SurvivalStats, SurvivalStatsConfig, SurvivalSummary};
pub use survival::{fit_power_law, log_grid, survival_curve, PowerLawFit, SurvivalCurve, SurvivalRecord, SurvivalTracker};

use crate::error::Result;
use crate::wta::WtaNetwork;

/// A resumable protocol.
pub trait Experiment {
    /// Runs the next chunk; `Ok(true)` once the protocol is complete.
    fn advance(&mut self) -> Result<bool>;
    fn log(&self) -> &ExperimentLog;
}

/// Functional synapses that are neither banned nor removed.
pub fn active_synapse_count(net: &WtaNetwork) -> usize {
    net.active_synapse_count()
}
