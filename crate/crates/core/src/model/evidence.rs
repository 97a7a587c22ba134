use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{GraphicalModel, ModelError};
use crate::scalar::Scalar;

/// Partial assignment of observed variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Evidence(BTreeMap<usize, usize>);

impl Evidence {
    pub fn new() -> Self {
        Evidence(BTreeMap::new())
    }

    /// Returns the previous value if the variable was already observed.
    pub fn insert(&mut self, var: usize, value: usize) -> Option<usize> {
        self.0.insert(var, value)
    }

    pub fn get(&self, var: usize) -> Option<usize> {
        self.0.get(&var).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0.iter().map(|(&k, &v)| (k, v))
    }

    pub fn validate<T: Scalar>(&self, model: &GraphicalModel<T>) -> Result<(), ModelError> {
        for (var, value) in self.iter() {
            if var >= model.num_vars() {
                return Err(ModelError::VariableIndex(var));
            }
            let domain_size = model.domain_size(var);
            if value >= domain_size {
                return Err(ModelError::ValueOutOfDomain {
                    var: model.var_name(var).to_owned(),
                    value,
                    domain_size,
                });
            }
        }
        Ok(())
    }

    /// Observes a random `fraction` of the variables at uniformly random values.
    pub fn sample<T: Scalar, R: Rng>(
        model: &GraphicalModel<T>,
        fraction: f64,
        rng: &mut R,
    ) -> Self {
        let count = (fraction.clamp(0.0, 1.0) * model.num_vars() as f64).round() as usize;
        let mut vars: Vec<usize> = (0..model.num_vars()).collect();
        vars.shuffle(rng);
        let mut evidence = Evidence::new();
        for &var in vars.iter().take(count) {
            evidence.insert(var, rng.gen_range(0..model.domain_size(var)));
        }
        evidence
    }

    /// Renders as an evidence file (`name=value` per line).
    pub fn to_text<T: Scalar>(&self, model: &GraphicalModel<T>) -> String {
        self.iter()
            .map(|(var, value)| format!("{}={}\n", model.var_name(var), value))
            .collect()
    }
}
