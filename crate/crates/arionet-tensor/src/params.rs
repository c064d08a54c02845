//! Named, ordered collection of learnable tensors.

use crate::Tensor;

/// Parameters of one model, addressable by name and iterated in
/// insertion order so that optimizer state and checkpoints line up
/// deterministically.
#[derive(Debug, Clone, Default)]
pub struct ParamSet {
    entries: Vec<(String, Tensor)>,
}

impl ParamSet {
    pub fn new() -> Self {
        ParamSet::default()
    }

    /// Register a parameter. Panics on duplicate names.
    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor) -> Tensor {
        let name = name.into();
        assert!(
            self.get(&name).is_none(),
            "duplicate parameter name {name}"
        );
        self.entries.push((name, tensor.clone()));
        tensor
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn zero_grads(&self) {
        for (_, t) in &self.entries {
            t.zero_grad();
        }
    }

    /// Total number of scalar parameters.
    pub fn scalar_count(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.numel()).sum()
    }

    /// Deep copy of all current values, for early-stopping snapshots.
    pub fn snapshot(&self) -> Vec<(String, Vec<f64>)> {
        self.entries
            .iter()
            .map(|(n, t)| (n.clone(), t.to_vec()))
            .collect()
    }

    /// Restore values captured by [`ParamSet::snapshot`].
    pub fn restore(&self, snapshot: &[(String, Vec<f64>)]) {
        assert_eq!(snapshot.len(), self.entries.len());
        for ((name, values), (have, tensor)) in snapshot.iter().zip(&self.entries) {
            assert_eq!(name, have, "snapshot order mismatch");
            tensor.set_data(values);
        }
    }
}
