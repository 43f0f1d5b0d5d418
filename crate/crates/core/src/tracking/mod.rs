//! Coupled chaser/target tracking.
//!
//! A measurement stream (odometry, USBL fixes, optical relative poses) is
//! turned into keyframes, each holding a chaser pose and a target state. The
//! target lives on SE(3) throughout in [`Mode::A`], and switches between R³
//! and SE(3) with optical availability in [`Mode::B`]. Target states are
//! chained by constant-twist priors and the whole graph is smoothed in batch.

mod build;
mod keyframes;
mod metrics;
mod odometry;
mod records;
mod smooth;

use thiserror::Error;

use crate::fgraph::GraphError;
use crate::manifold::ManifoldError;

pub use build::{build_graph, initialize_values, TrackingConfig, TrackingProblem};
pub use keyframes::{schedule_keyframes, Keyframe, KeyframeType, Mode, ModePolicy, Transition};
pub use metrics::{
    align_truth, baselines, metrics, relative_position_error, Baselines, ErrorReport, ErrorStats,
    KeyframeError, TruthSample, TRUTH_ALIGNMENT_TOLERANCE,
};
pub use odometry::DeadReckoning;
pub use records::{MeasurementKind, MeasurementRecord, Payload};
pub use smooth::{extrapolate, smooth, KeyframeEstimate, TrajectoryEstimate};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrackingError {
    #[error("record {index}: {reason}")]
    InvalidRecord { index: usize, reason: String },
    #[error("record {index} at t = {timestamp}s is earlier than its predecessor")]
    Ordering { index: usize, timestamp: f64 },
    #[error("time gate must be positive and finite, got {0}")]
    InvalidGate(f64),
    #[error("no target-relative measurement to anchor the target: {0}")]
    NeedsPrior(String),
    #[error("odometry does not cover t = {timestamp:.3}s")]
    OdometryCoverage { timestamp: f64 },
    #[error("no ground truth within {tolerance}s of keyframe at t = {timestamp:.3}s")]
    TruthAlignment { timestamp: f64, tolerance: f64 },
    #[error("invalid tracking configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
}
