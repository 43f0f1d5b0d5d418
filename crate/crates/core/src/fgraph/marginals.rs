use nalgebra::{DMatrix, DVector};

use super::graph::linearize;
use super::solver::factor_full_rank;
use super::{FactorGraph, GraphError, Values, VariableKey};

/// Marginal covariance of `key`: its diagonal block of `(JᵀJ)⁻¹` at `values`.
pub fn marginal_covariance(
    graph: &FactorGraph,
    values: &Values,
    key: &VariableKey,
) -> Result<DMatrix<f64>, GraphError> {
    marginal_covariances(graph, values, std::slice::from_ref(key)).map(|mut v| v.remove(0))
}

/// Several marginals sharing one factorization.
pub fn marginal_covariances(
    graph: &FactorGraph,
    values: &Values,
    keys: &[VariableKey],
) -> Result<Vec<DMatrix<f64>>, GraphError> {
    let system = linearize(graph, values)?;
    let chol = factor_full_rank(&system)?;
    let n = system.layout.dim();
    keys.iter()
        .map(|key| {
            let off = system
                .layout
                .offset(key)
                .ok_or_else(|| GraphError::UnknownVariable(key.to_string()))?;
            let d = key.dim();
            let mut block = DMatrix::zeros(d, d);
            for c in 0..d {
                let mut e = DVector::zeros(n);
                e[off + c] = 1.0;
                let col = chol.solve(&e);
                block.set_column(c, &col.rows(off, d));
            }
            // exact symmetry
            Ok((&block + block.transpose()) * 0.5)
        })
        .collect()
}
