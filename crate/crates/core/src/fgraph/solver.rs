//! Levenberg–Marquardt on the tangent spaces of the variables.

use std::collections::BTreeSet;

use nalgebra::DVector;

use super::graph::{linearize, retract, total_cost, Layout, LinearSystem};
use super::sparse::SkylineCholesky;
use super::{FactorGraph, GraphError, Values};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub max_iterations: usize,
    /// Stop once the cost itself falls below this.
    pub absolute_tolerance: f64,
    /// Stop once an accepted step decreases the cost by less than this fraction.
    pub relative_tolerance: f64,
    /// Stop once the accepted step satisfies `|δ|∞` below this.
    pub step_tolerance: f64,
    pub initial_lambda: f64,
    pub lambda_up: f64,
    pub lambda_down: f64,
    /// Give up once damping exceeds this without an accepted step.
    pub max_lambda: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            absolute_tolerance: 1e-24,
            relative_tolerance: 1e-9,
            step_tolerance: 1e-10,
            initial_lambda: 1e-4,
            lambda_up: 10.0,
            lambda_down: 10.0,
            max_lambda: 1e16,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<(), GraphError> {
        let positive = [
            ("absolute_tolerance", self.absolute_tolerance),
            ("relative_tolerance", self.relative_tolerance),
            ("step_tolerance", self.step_tolerance),
            ("initial_lambda", self.initial_lambda),
        ];
        for (name, v) in positive {
            if v.is_nan() || v <= 0.0 {
                return Err(GraphError::InvalidSettings(format!("{name} must be > 0")));
            }
        }
        if self.lambda_up.is_nan()
            || self.lambda_down.is_nan()
            || self.lambda_up <= 1.0
            || self.lambda_down <= 1.0
        {
            return Err(GraphError::InvalidSettings(
                "damping multipliers must be > 1".into(),
            ));
        }
        if self.max_iterations == 0 {
            return Err(GraphError::InvalidSettings(
                "max_iterations must be > 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub initial_cost: f64,
    pub final_cost: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Cost at the start and after every accepted step.
    pub cost_trace: Vec<f64>,
}

/// Checks that the undamped normal equations have full rank and names the
/// variables spanning the null space otherwise.
pub(crate) fn factor_full_rank(system: &LinearSystem) -> Result<SkylineCholesky, GraphError> {
    let chol = system.hessian.cholesky();
    if chol.is_full_rank() {
        Ok(chol)
    } else {
        Err(underconstrained(&system.layout, chol.deficient()))
    }
}

fn underconstrained(layout: &Layout, cols: &[usize]) -> GraphError {
    let mut seen = BTreeSet::new();
    let mut variables = Vec::new();
    for &c in cols {
        let k = layout.key_at(c);
        if seen.insert(k.id) {
            variables.push(k.to_string());
        }
    }
    GraphError::Underconstrained { variables }
}

/// Rank check of the problem at `values` without solving it.
pub fn check_solvable(graph: &FactorGraph, values: &Values) -> Result<(), GraphError> {
    factor_full_rank(&linearize(graph, values)?).map(|_| ())
}

/// Minimizes the total cost starting from `initial`. Updates are applied per
/// variable as `x ← x ⊕ δ`.
pub fn optimize(
    graph: &FactorGraph,
    initial: &Values,
    settings: &SolverSettings,
) -> Result<(Values, SolveReport), GraphError> {
    settings.validate()?;
    let mut values = initial.clone();
    let mut system = linearize(graph, &values)?;
    factor_full_rank(&system)?;

    let mut report = SolveReport {
        initial_cost: system.cost,
        final_cost: system.cost,
        iterations: 0,
        converged: false,
        cost_trace: vec![system.cost],
    };
    if system.cost <= settings.absolute_tolerance {
        report.converged = true;
        return Ok((values, report));
    }

    let mut lambda = settings.initial_lambda;
    while report.iterations < settings.max_iterations {
        report.iterations += 1;
        let diag = system.hessian.diagonal();
        let mut accepted = false;
        while lambda <= settings.max_lambda {
            let mut damped = system.hessian.clone();
            damped.add_diagonal(&diag.map(|d| lambda * d.max(1e-9)));
            let chol = damped.cholesky();
            if !chol.is_full_rank() {
                lambda *= settings.lambda_up;
                continue;
            }
            let delta: DVector<f64> = -chol.solve(&system.gradient);
            let candidate = match retract(&values, &system.layout, &delta) {
                Ok(c) => c,
                Err(_) => {
                    lambda *= settings.lambda_up;
                    continue;
                }
            };
            let new_cost = match total_cost(graph, &candidate) {
                Ok(c) if c.is_finite() => c,
                _ => {
                    lambda *= settings.lambda_up;
                    continue;
                }
            };
            if new_cost <= system.cost {
                let decrease = system.cost - new_cost;
                let step = delta.amax();
                values = candidate;
                lambda = (lambda / settings.lambda_down).max(1e-12);
                report.cost_trace.push(new_cost);
                report.final_cost = new_cost;
                accepted = true;
                if new_cost <= settings.absolute_tolerance
                    || decrease <= settings.relative_tolerance * system.cost
                    || step <= settings.step_tolerance
                {
                    report.converged = true;
                }
                break;
            }
            lambda *= settings.lambda_up;
        }
        if !accepted {
            // No descent direction left at any damping: we are at a minimum to
            // working precision if the gradient vanishes.
            report.converged = system.gradient.amax() <= 1e-9 * (1.0 + system.cost);
            break;
        }
        if report.converged {
            break;
        }
        system = linearize(graph, &values)?;
    }
    Ok((values, report))
}
