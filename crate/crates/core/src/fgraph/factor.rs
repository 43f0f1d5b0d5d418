use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::manifold::{Element, ManifoldError, ManifoldKind};

use super::{GraphError, NoiseModel, Values, VariableKey};

/// Failure while evaluating a residual or its Jacobians.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FactorError {
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
    #[error("{step}: {source}")]
    Step {
        step: &'static str,
        source: ManifoldError,
    },
    #[error("expected {expected} states, got {found}")]
    Arity { expected: usize, found: usize },
    #[error("state {index} must be {expected}, found {found}")]
    Kind {
        index: usize,
        expected: ManifoldKind,
        found: ManifoldKind,
    },
    #[error("gimbal lock: pitch {pitch:.6} rad too close to ±π/2")]
    GimbalLock { pitch: f64 },
    #[error("{0}")]
    Invalid(String),
}

/// Residual and analytic Jacobians of one factor, in unwhitened form.
///
/// Jacobians are taken with respect to the right-tangent perturbation
/// `X ⊕ δ` of each state, in key order.
pub trait ResidualModel: fmt::Debug + Send + Sync {
    /// Short human-readable factor type, e.g. `"constant_twist"`.
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    /// Manifold of each connected state.
    fn kinds(&self) -> Vec<ManifoldKind>;

    fn residual(&self, states: &[&Element]) -> Result<DVector<f64>, FactorError>;

    fn linearize(
        &self,
        states: &[&Element],
    ) -> Result<(DVector<f64>, Vec<DMatrix<f64>>), FactorError>;
}

/// Checks arity and kinds of the evaluated states.
pub fn expect_kinds(states: &[&Element], kinds: &[ManifoldKind]) -> Result<(), FactorError> {
    if states.len() != kinds.len() {
        return Err(FactorError::Arity {
            expected: kinds.len(),
            found: states.len(),
        });
    }
    for (index, (s, k)) in states.iter().zip(kinds).enumerate() {
        if s.kind() != *k {
            return Err(FactorError::Kind {
                index,
                expected: *k,
                found: s.kind(),
            });
        }
    }
    Ok(())
}

/// A residual model bound to 1–3 variables and a noise model.
#[derive(Debug, Clone)]
pub struct Factor {
    keys: Vec<VariableKey>,
    noise: NoiseModel,
    model: Arc<dyn ResidualModel>,
}

impl Factor {
    pub fn new(
        keys: Vec<VariableKey>,
        noise: NoiseModel,
        model: impl ResidualModel + 'static,
    ) -> Result<Self, GraphError> {
        let model: Arc<dyn ResidualModel> = Arc::new(model);
        if keys.is_empty() || keys.len() > 3 {
            return Err(GraphError::BadFactor(format!(
                "{} binds {} keys; 1 to 3 are supported",
                model.name(),
                keys.len()
            )));
        }
        if noise.dim() != model.dim() {
            return Err(GraphError::BadFactor(format!(
                "{}: residual dimension {} but noise dimension {}",
                model.name(),
                model.dim(),
                noise.dim()
            )));
        }
        let kinds = model.kinds();
        if kinds.len() != keys.len() {
            return Err(GraphError::BadFactor(format!(
                "{}: model expects {} keys, got {}",
                model.name(),
                kinds.len(),
                keys.len()
            )));
        }
        for (k, kind) in keys.iter().zip(&kinds) {
            if k.kind != *kind {
                return Err(GraphError::KindMismatch {
                    key: k.to_string(),
                    found: *kind,
                });
            }
        }
        Ok(Self { keys, noise, model })
    }

    pub fn keys(&self) -> &[VariableKey] {
        &self.keys
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn name(&self) -> &str {
        self.model.name()
    }

    pub fn model(&self) -> &dyn ResidualModel {
        self.model.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    fn describe(&self) -> String {
        let keys: Vec<String> = self.keys.iter().map(|k| k.to_string()).collect();
        format!("{}({})", self.name(), keys.join(", "))
    }

    fn states<'a>(&self, values: &'a Values) -> Result<Vec<&'a Element>, GraphError> {
        self.keys.iter().map(|k| values.get(k)).collect()
    }

    fn wrap(&self, source: FactorError) -> GraphError {
        GraphError::Factor {
            factor: self.describe(),
            source,
        }
    }

    /// Unwhitened residual.
    pub fn residual(&self, values: &Values) -> Result<DVector<f64>, GraphError> {
        let states = self.states(values)?;
        self.model.residual(&states).map_err(|e| self.wrap(e))
    }

    /// `‖ε‖²_Σ`.
    pub fn cost(&self, values: &Values) -> Result<f64, GraphError> {
        Ok(self.noise.mahalanobis_squared(&self.residual(values)?))
    }

    /// Whitened residual and per-key whitened Jacobians.
    pub fn linearize(
        &self,
        values: &Values,
    ) -> Result<(DVector<f64>, Vec<DMatrix<f64>>), GraphError> {
        let states = self.states(values)?;
        let (r, js) = self.model.linearize(&states).map_err(|e| self.wrap(e))?;
        let js = js.iter().map(|j| self.noise.whiten_matrix(j)).collect();
        Ok((self.noise.whiten(&r), js))
    }
}
