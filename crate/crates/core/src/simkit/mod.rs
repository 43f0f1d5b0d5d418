//! Synthetic scenarios and numerical oracles.
//!
//! Trajectories are generated from piecewise-constant body twists, so they
//! belong to exactly the model class the constant-twist prior assumes.
//! Measurement noise is drawn from a seeded ChaCha stream.

mod finite_diff;
mod scenario;
mod unit_circle;

use thiserror::Error;

use crate::fgraph::GraphError;
use crate::manifold::ManifoldError;

pub use finite_diff::{
    finite_difference_jacobian, finite_difference_states, perturb, series_exp_se3, series_exp_so3,
    FD_STEP,
};
pub use scenario::{
    generate_trajectory, generate_truth, synthesize_measurements, Agent, GroundTruth, NoiseSigmas,
    ScenarioConfig, Segment,
};
pub use unit_circle::{
    arc_distance, arc_pose, unit_circle_fixture, unit_circle_fixture_with, UnitCircleFixture,
    UnitCircleSpec, UnitCircleVariant,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}
