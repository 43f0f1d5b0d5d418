//! Sparse nonlinear least squares over variables on mixed manifolds.
//!
//! The objective is `Σᵢ ‖εᵢ(x)‖²_Σᵢ`. Each iteration linearizes in the tangent
//! spaces of the current estimate, solves the damped normal equations with an
//! envelope Cholesky on the time ordering, and retracts with `x ⊕ δ`.

mod factor;
mod graph;
mod key;
mod marginals;
mod noise;
mod solver;
pub mod sparse;

use thiserror::Error;

use crate::manifold::{ManifoldError, ManifoldKind};

pub use factor::{expect_kinds, Factor, FactorError, ResidualModel};
pub use graph::{linearize, retract, total_cost, FactorGraph, Layout, LinearSystem};
pub use key::{Values, VariableKey};
pub use marginals::{marginal_covariance, marginal_covariances};
pub use noise::NoiseModel;
pub use solver::{check_solvable, optimize, SolveReport, SolverSettings};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("variable {0} is not registered in the graph")]
    UnknownVariable(String),
    #[error("variable {0} is already registered")]
    DuplicateVariable(String),
    #[error("no value for variable {0}")]
    MissingValue(String),
    #[error("variable {key} cannot hold a value on {found}")]
    KindMismatch { key: String, found: ManifoldKind },
    #[error("factor {factor} failed: {source}")]
    Factor { factor: String, source: FactorError },
    #[error("underconstrained graph; null space touches {}", variables.join(", "))]
    Underconstrained { variables: Vec<String> },
    #[error("invalid noise model: {0}")]
    InvalidNoise(String),
    #[error("invalid solver settings: {0}")]
    InvalidSettings(String),
    #[error("invalid factor: {0}")]
    BadFactor(String),
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
}
