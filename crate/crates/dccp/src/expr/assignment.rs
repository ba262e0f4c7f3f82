use super::{Expr, VarId, Variable};
use nalgebra::DMatrix;
use std::collections::BTreeMap;

/// A value for every variable of interest, keyed by variable id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assignment {
    values: BTreeMap<VarId, DMatrix<f64>>,
}

impl Assignment {
    pub fn new() -> Self {
        Assignment::default()
    }

    pub fn set(&mut self, var: &Variable, value: DMatrix<f64>) -> &mut Self {
        assert_eq!(
            (value.nrows(), value.ncols()),
            (var.shape().rows(), var.shape().cols()),
            "assignment shape mismatch for variable {}",
            var.name()
        );
        self.values.insert(var.id(), value);
        self
    }

    pub fn set_scalar(&mut self, var: &Variable, value: f64) -> &mut Self {
        self.set(var, DMatrix::from_element(1, 1, value))
    }

    pub fn set_vector(&mut self, var: &Variable, values: &[f64]) -> &mut Self {
        self.set(var, DMatrix::from_column_slice(values.len(), 1, values))
    }

    pub fn get(&self, var: &Variable) -> Option<&DMatrix<f64>> {
        self.values.get(&var.id())
    }

    pub fn get_by_id(&self, id: VarId) -> Option<&DMatrix<f64>> {
        self.values.get(&id)
    }

    pub fn scalar(&self, var: &Variable) -> Option<f64> {
        self.get(var).map(|m| m[(0, 0)])
    }

    pub fn contains(&self, id: VarId) -> bool {
        self.values.contains_key(&id)
    }

    pub fn covers(&self, e: &Expr) -> bool {
        e.variables().keys().all(|id| self.values.contains_key(id))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VarId, &DMatrix<f64>)> {
        self.values.iter()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Entrywise convex combination `alpha * self + (1 - alpha) * other`
    /// over the shared variable set (both must cover the same ids).
    pub fn lerp(&self, other: &Assignment, alpha: f64) -> Assignment {
        assert_eq!(
            self.values.keys().collect::<Vec<_>>(),
            other.values.keys().collect::<Vec<_>>(),
            "assignments cover different variables"
        );
        let values = self
            .values
            .iter()
            .map(|(id, a)| {
                let b = &other.values[id];
                (*id, a * alpha + b * (1.0 - alpha))
            })
            .collect();
        Assignment { values }
    }

    /// Merge `other` into `self`, overwriting shared ids.
    pub fn extend(&mut self, other: &Assignment) {
        for (id, v) in &other.values {
            self.values.insert(*id, v.clone());
        }
    }
}
