use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};

use crate::manifold::{Element, ManifoldKind};

use super::GraphError;

/// Handle of one state variable.
///
/// Identity (equality, hashing) is the `id`; `tag` is only used for display,
/// e.g. `c12` for a chaser state or `t12` for a target state.
#[derive(Debug, Clone, Copy)]
pub struct VariableKey {
    pub id: u64,
    pub kind: ManifoldKind,
    pub timestamp: f64,
    pub tag: char,
}

impl VariableKey {
    pub fn new(id: u64, kind: ManifoldKind, timestamp: f64) -> Self {
        Self {
            id,
            kind,
            timestamp,
            tag: 'x',
        }
    }

    pub fn tagged(mut self, tag: char) -> Self {
        self.tag = tag;
        self
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    /// Solver ordering: by time, then id.
    pub fn order(&self, other: &VariableKey) -> Ordering {
        self.timestamp
            .total_cmp(&other.timestamp)
            .then(self.id.cmp(&other.id))
    }
}

impl PartialEq for VariableKey {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

impl Eq for VariableKey {}

impl Hash for VariableKey {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.id.hash(state);
    }
}

impl fmt::Display for VariableKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}[{} @ {:.3}s]",
            self.tag, self.id, self.kind, self.timestamp
        )
    }
}

/// Current estimate: one manifold element per variable id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Values {
    elements: BTreeMap<u64, Element>,
}

impl Values {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or replaces; the element must live on the key's manifold.
    pub fn insert(&mut self, key: &VariableKey, element: Element) -> Result<(), GraphError> {
        if element.kind() != key.kind {
            return Err(GraphError::KindMismatch {
                key: key.to_string(),
                found: element.kind(),
            });
        }
        self.elements.insert(key.id, element);
        Ok(())
    }

    pub fn get(&self, key: &VariableKey) -> Result<&Element, GraphError> {
        self.elements
            .get(&key.id)
            .ok_or_else(|| GraphError::MissingValue(key.to_string()))
    }

    pub fn get_id(&self, id: u64) -> Option<&Element> {
        self.elements.get(&id)
    }

    pub fn contains(&self, key: &VariableKey) -> bool {
        self.elements.contains_key(&key.id)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&u64, &Element)> {
        self.elements.iter()
    }
}
