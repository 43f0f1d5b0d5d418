use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector};

use super::sparse::SkylineMatrix;
use super::{Factor, GraphError, Values, VariableKey};

/// The MAP problem: a set of variables and the factors over them.
#[derive(Debug, Clone, Default)]
pub struct FactorGraph {
    variables: BTreeMap<u64, VariableKey>,
    factors: Vec<Factor>,
}

impl FactorGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_variable(&mut self, key: VariableKey) -> Result<(), GraphError> {
        if self.variables.contains_key(&key.id) {
            return Err(GraphError::DuplicateVariable(key.to_string()));
        }
        self.variables.insert(key.id, key);
        Ok(())
    }

    pub fn add_factor(&mut self, factor: Factor) -> Result<(), GraphError> {
        for (i, k) in factor.keys().iter().enumerate() {
            match self.variables.get(&k.id) {
                None => return Err(GraphError::UnknownVariable(k.to_string())),
                Some(reg) if reg.kind != k.kind => {
                    return Err(GraphError::KindMismatch {
                        key: reg.to_string(),
                        found: k.kind,
                    })
                }
                _ => {}
            }
            if factor.keys()[..i].contains(k) {
                return Err(GraphError::BadFactor(format!(
                    "{} binds {} twice",
                    factor.name(),
                    k
                )));
            }
        }
        self.factors.push(factor);
        Ok(())
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn variable(&self, id: u64) -> Option<&VariableKey> {
        self.variables.get(&id)
    }

    /// Variables in solver order (time, then id).
    pub fn variables(&self) -> Vec<VariableKey> {
        let mut keys: Vec<VariableKey> = self.variables.values().copied().collect();
        keys.sort_by(|a, b| a.order(b));
        keys
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    /// Number of factors whose type name equals `name`.
    pub fn count_factors(&self, name: &str) -> usize {
        self.factors.iter().filter(|f| f.name() == name).count()
    }
}

/// Sum over factors of `‖ε‖²_Σ`.
pub fn total_cost(graph: &FactorGraph, values: &Values) -> Result<f64, GraphError> {
    graph.factors.iter().map(|f| f.cost(values)).sum()
}

/// Scalar layout of the stacked tangent vector.
#[derive(Debug, Clone)]
pub struct Layout {
    keys: Vec<VariableKey>,
    offsets: Vec<usize>,
    index: HashMap<u64, usize>,
    dim: usize,
}

impl Layout {
    pub fn new(keys: Vec<VariableKey>) -> Self {
        let mut offsets = Vec::with_capacity(keys.len());
        let mut index = HashMap::with_capacity(keys.len());
        let mut dim = 0;
        for (i, k) in keys.iter().enumerate() {
            offsets.push(dim);
            index.insert(k.id, i);
            dim += k.dim();
        }
        Self {
            keys,
            offsets,
            index,
            dim,
        }
    }

    pub fn keys(&self) -> &[VariableKey] {
        &self.keys
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn position(&self, key: &VariableKey) -> Option<usize> {
        self.index.get(&key.id).copied()
    }

    pub fn offset(&self, key: &VariableKey) -> Option<usize> {
        self.position(key).map(|i| self.offsets[i])
    }

    /// Variable owning scalar column `col`.
    pub fn key_at(&self, col: usize) -> &VariableKey {
        let i = self.offsets.partition_point(|&o| o <= col) - 1;
        &self.keys[i]
    }

    pub fn block(&self, x: &DVector<f64>, key: &VariableKey) -> Option<DVector<f64>> {
        let o = self.offset(key)?;
        Some(x.rows(o, key.dim()).into_owned())
    }
}

/// Gauss–Newton normal equations `H δ = -g` at a linearization point, with
/// `H = JᵀJ` and `g = Jᵀr` built from whitened residuals.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub layout: Layout,
    pub hessian: SkylineMatrix,
    pub gradient: DVector<f64>,
    pub cost: f64,
}

impl LinearSystem {
    pub fn dense_hessian(&self) -> DMatrix<f64> {
        self.hessian.to_dense()
    }
}

/// Envelope of `JᵀJ` for the solver ordering.
fn envelope(graph: &FactorGraph, layout: &Layout) -> Vec<usize> {
    let n_vars = layout.keys.len();
    let mut first_block: Vec<usize> = (0..n_vars).collect();
    for f in &graph.factors {
        let pos: Vec<usize> = f.keys().iter().filter_map(|k| layout.position(k)).collect();
        let lo = pos.iter().copied().min().unwrap_or(0);
        for p in pos {
            first_block[p] = first_block[p].min(lo);
        }
    }
    let mut first = Vec::with_capacity(layout.dim);
    for (i, k) in layout.keys.iter().enumerate() {
        let f = layout.offsets[first_block[i]];
        first.extend(std::iter::repeat_n(f, k.dim()));
    }
    first
}

pub fn linearize(graph: &FactorGraph, values: &Values) -> Result<LinearSystem, GraphError> {
    let layout = Layout::new(graph.variables());
    for k in layout.keys() {
        values.get(k)?;
    }
    let mut hessian = SkylineMatrix::new(envelope(graph, &layout));
    let mut gradient = DVector::zeros(layout.dim);
    let mut cost = 0.0;
    for f in &graph.factors {
        let (r, js) = f.linearize(values)?;
        cost += r.norm_squared();
        let offs: Vec<usize> = f
            .keys()
            .iter()
            .map(|k| layout.offset(k).expect("factor keys are registered"))
            .collect();
        for (a, ja) in js.iter().enumerate() {
            let g = ja.tr_mul(&r);
            let mut seg = gradient.rows_mut(offs[a], ja.ncols());
            seg += g;
            for (b, jb) in js.iter().enumerate() {
                if offs[a] < offs[b] {
                    continue;
                }
                let block = ja.tr_mul(jb);
                for r_i in 0..block.nrows() {
                    let c_end = if a == b { r_i + 1 } else { block.ncols() };
                    for c_i in 0..c_end {
                        hessian.add_lower(offs[a] + r_i, offs[b] + c_i, block[(r_i, c_i)]);
                    }
                }
            }
        }
    }
    Ok(LinearSystem {
        layout,
        hessian,
        gradient,
        cost,
    })
}

/// Applies `x ⊕ δ` blockwise.
pub fn retract(
    values: &Values,
    layout: &Layout,
    delta: &DVector<f64>,
) -> Result<Values, GraphError> {
    let mut out = values.clone();
    for k in layout.keys() {
        let d = layout.block(delta, k).expect("layout key");
        let x = values.get(k)?;
        out.insert(k, x.oplus(&d)?)?;
    }
    Ok(out)
}
