//! Constant-twist motion priors on Lie groups and factor-graph smoothing of
//! coupled chaser/target trajectories.
//!
//! * [`manifold`]: SO(3), SE(3) and Rⁿ with closed-form Jacobians.
//! * [`fgraph`]: sparse Levenberg–Marquardt over mixed-manifold variables.
//! * [`factors`]: the ternary constant-twist prior and measurement factors.
//! * [`tracking`]: keyframe scheduling, graph construction and smoothing of
//!   a measurement stream, plus error metrics against ground truth.
//! * [`simkit`]: synthetic scenarios, unit-circle fixtures and numerical
//!   oracles.
//! * [`cli`]: the `ctwist` command line.

pub mod cli;
pub mod factors;
pub mod fgraph;
pub mod manifold;
pub mod simkit;
pub mod tracking;
