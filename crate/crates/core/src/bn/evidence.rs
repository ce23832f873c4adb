use std::collections::BTreeMap;

use super::BayesianNetwork;
use crate::inference::InferenceError;

/// Hard evidence: at most one asserted value per variable, by name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Evidence {
    values: BTreeMap<String, String>,
}

impl Evidence {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builder-style insert; a later assertion on the same variable replaces
    /// the earlier one.
    pub fn with(mut self, variable: impl Into<String>, value: impl Into<String>) -> Self {
        self.insert(variable, value);
        self
    }

    pub fn insert(&mut self, variable: impl Into<String>, value: impl Into<String>) {
        self.values.insert(variable.into(), value.into());
    }

    pub fn get(&self, variable: &str) -> Option<&str> {
        self.values.get(variable).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Value indices aligned with the network's variables.
    pub fn resolve(&self, bn: &BayesianNetwork) -> Result<Vec<Option<usize>>, InferenceError> {
        let mut out = vec![None; bn.len()];
        for (name, value) in &self.values {
            let var = bn
                .index_of(name)
                .ok_or_else(|| InferenceError::UnknownVariable(name.clone()))?;
            let v = bn
                .variable(var)
                .value_index(value)
                .ok_or_else(|| InferenceError::UnknownValue {
                    variable: name.clone(),
                    value: value.clone(),
                })?;
            out[var] = Some(v);
        }
        Ok(out)
    }
}

impl<K: Into<String>, V: Into<String>> FromIterator<(K, V)> for Evidence {
    fn from_iter<T: IntoIterator<Item = (K, V)>>(iter: T) -> Self {
        Self {
            values: iter.into_iter().map(|(k, v)| (k.into(), v.into())).collect(),
        }
    }
}
