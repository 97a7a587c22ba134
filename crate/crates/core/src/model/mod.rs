//! Ground discrete graphical models: variables with finite domains and
//! weighted OR/AND features over equality literals.
//!
//! The unnormalized log-probability of a state is
//! `log_offset + Σ_j w_j · [f_j satisfied]`.

mod evidence;
mod exact;
mod format;
pub mod generators;

use std::collections::HashMap;
use std::fmt;
use std::ops::Index;

use thiserror::Error;

use crate::scalar::Scalar;

pub use evidence::Evidence;
pub use exact::{exact_marginals, DEFAULT_STATE_CAP};
pub use format::{parse_evidence, parse_model};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<ModelError>,
    },
    #[error("syntax: {0}")]
    Syntax(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("value {value} out of domain for `{var}` (size {domain_size})")]
    ValueOutOfDomain {
        var: String,
        value: usize,
        domain_size: usize,
    },
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("variable `{name}` has domain size {size}, need at least 2")]
    DomainTooSmall { name: String, size: usize },
    #[error("feature has no literals")]
    EmptyFeature,
    #[error("feature repeats a literal on `{0}`")]
    DuplicateLiteral(String),
    #[error("non-finite weight or offset")]
    NonFinite,
    #[error("variable index {0} out of range")]
    VariableIndex(usize),
    #[error("state has {got} entries but the model has {expected} variables")]
    StateLength { expected: usize, got: usize },
    #[error("evidence assigns `{0}` more than once")]
    DuplicateEvidence(String),
    #[error("{states} joint states exceed the enumeration cap of {cap}")]
    StateSpaceTooLarge { states: u128, cap: u64 },
}

impl ModelError {
    pub(crate) fn at_line(self, line: usize) -> Self {
        ModelError::AtLine {
            line,
            source: Box::new(self),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Variable {
    pub id: usize,
    pub name: String,
    pub domain_size: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarity {
    Eq,
    Neq,
}

/// Test `X = v` or `X ≠ v` on a single variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub var: usize,
    pub value: usize,
    pub polarity: Polarity,
}

impl Literal {
    pub fn eq(var: usize, value: usize) -> Self {
        Literal {
            var,
            value,
            polarity: Polarity::Eq,
        }
    }

    pub fn neq(var: usize, value: usize) -> Self {
        Literal {
            var,
            value,
            polarity: Polarity::Neq,
        }
    }

    #[inline]
    pub fn holds(&self, value: usize) -> bool {
        match self.polarity {
            Polarity::Eq => value == self.value,
            Polarity::Neq => value != self.value,
        }
    }

    /// Logical negation. On binary domains `X ≠ v` is rewritten as `X = 1 - v`.
    pub fn negate(&self, domain_size: usize) -> Self {
        match self.polarity {
            Polarity::Eq if domain_size == 2 => Literal::eq(self.var, 1 - self.value),
            Polarity::Eq => Literal::neq(self.var, self.value),
            Polarity::Neq => Literal::eq(self.var, self.value),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Connective {
    Or,
    And,
}

impl fmt::Display for Connective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Connective::Or => "OR",
            Connective::And => "AND",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Feature<T> {
    pub connective: Connective,
    pub literals: Vec<Literal>,
    pub weight: T,
}

impl<T: Scalar> Feature<T> {
    pub fn or(weight: T, literals: Vec<Literal>) -> Self {
        Feature {
            connective: Connective::Or,
            literals,
            weight,
        }
    }

    pub fn and(weight: T, literals: Vec<Literal>) -> Self {
        Feature {
            connective: Connective::And,
            literals,
            weight,
        }
    }

    pub fn is_satisfied(&self, state: &State) -> bool {
        match self.connective {
            Connective::Or => self.literals.iter().any(|l| l.holds(state[l.var])),
            Connective::And => self.literals.iter().all(|l| l.holds(state[l.var])),
        }
    }

    /// Whether a partial assignment alone makes the feature true, whatever
    /// the unassigned variables take.
    pub fn is_satisfied_by_partial(&self, assigned: impl Fn(usize) -> Option<usize>) -> bool {
        match self.connective {
            Connective::Or => self
                .literals
                .iter()
                .any(|l| assigned(l.var).is_some_and(|v| l.holds(v))),
            Connective::And => self
                .literals
                .iter()
                .all(|l| assigned(l.var).is_some_and(|v| l.holds(v))),
        }
    }

    /// Sorted, deduplicated variables mentioned by the feature.
    pub fn vars(&self) -> Vec<usize> {
        let mut vars: Vec<usize> = self.literals.iter().map(|l| l.var).collect();
        vars.sort_unstable();
        vars.dedup();
        vars
    }
}

/// A full assignment, one value per variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct State(Vec<usize>);

impl State {
    pub fn new(values: Vec<usize>) -> Self {
        State(values)
    }

    pub fn zeros(n: usize) -> Self {
        State(vec![0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[usize] {
        &self.0
    }

    #[inline]
    pub fn set(&mut self, var: usize, value: usize) {
        self.0[var] = value;
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }
}

impl Index<usize> for State {
    type Output = usize;

    #[inline]
    fn index(&self, var: usize) -> &usize {
        &self.0[var]
    }
}

impl From<Vec<usize>> for State {
    fn from(values: Vec<usize>) -> Self {
        State(values)
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Canonical decimal rendering of a weight. Two weights get the same colour,
/// bucket, or signature entry iff their keys are equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WeightKey(String);

impl WeightKey {
    pub fn of<T: Scalar>(weight: T) -> Self {
        if weight == T::zero() {
            // fold -0 into 0
            WeightKey("0".to_owned())
        } else {
            WeightKey(weight.to_string())
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphicalModel<T> {
    variables: Vec<Variable>,
    features: Vec<Feature<T>>,
    log_offset: T,
    by_name: HashMap<String, usize>,
}

impl<T: Scalar> GraphicalModel<T> {
    /// Builds a model from `(name, domain_size)` pairs, checking every invariant.
    pub fn new(
        variables: Vec<(String, usize)>,
        features: Vec<Feature<T>>,
        log_offset: T,
    ) -> Result<Self, ModelError> {
        let mut builder = ModelBuilder::new();
        for (name, size) in variables {
            builder.var(name, size)?;
        }
        for feature in features {
            builder.push_feature(feature)?;
        }
        builder.offset(log_offset)?;
        Ok(builder.build())
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn features(&self) -> &[Feature<T>] {
        &self.features
    }

    pub fn log_offset(&self) -> T {
        self.log_offset
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn domain_size(&self, var: usize) -> usize {
        self.variables[var].domain_size
    }

    pub fn domain_sizes(&self) -> Vec<usize> {
        self.variables.iter().map(|v| v.domain_size).collect()
    }

    pub fn var_id(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn var_name(&self, var: usize) -> &str {
        &self.variables[var].name
    }

    pub fn names(&self) -> Vec<String> {
        self.variables.iter().map(|v| v.name.clone()).collect()
    }

    /// Number of joint states, saturating at `u128::MAX`.
    pub fn state_count(&self) -> u128 {
        self.variables
            .iter()
            .try_fold(1u128, |acc, v| acc.checked_mul(v.domain_size as u128))
            .unwrap_or(u128::MAX)
    }

    pub fn check_state(&self, state: &State) -> Result<(), ModelError> {
        if state.len() != self.num_vars() {
            return Err(ModelError::StateLength {
                expected: self.num_vars(),
                got: state.len(),
            });
        }
        for (var, &value) in state.values().iter().enumerate() {
            let domain_size = self.domain_size(var);
            if value >= domain_size {
                return Err(ModelError::ValueOutOfDomain {
                    var: self.var_name(var).to_owned(),
                    value,
                    domain_size,
                });
            }
        }
        Ok(())
    }

    /// `log_offset + Σ_j w_j · [f_j(state)]`.
    pub fn log_weight(&self, state: &State) -> T {
        self.features
            .iter()
            .filter(|f| f.is_satisfied(state))
            .fold(self.log_offset, |acc, f| acc + f.weight)
    }

    /// For each variable, the indices of the features that mention it.
    pub fn feature_blankets(&self) -> Vec<Vec<usize>> {
        let mut blankets = vec![Vec::new(); self.num_vars()];
        for (j, f) in self.features.iter().enumerate() {
            for v in f.vars() {
                blankets[v].push(j);
            }
        }
        blankets
    }

    pub fn is_clausal(&self) -> bool {
        self.features.iter().all(|f| f.connective == Connective::Or)
    }

    /// Rewrites every AND feature `(L1 ∧ … ∧ Lk, w)` as the clause
    /// `(¬L1 ∨ … ∨ ¬Lk, -w)` and adds `w` to the offset. The unnormalized
    /// distribution is unchanged.
    pub fn normalize_to_clauses(&self) -> Self {
        let mut out = self.clone();
        for f in &mut out.features {
            if f.connective == Connective::Or {
                continue;
            }
            let mut negated: Vec<Literal> = f
                .literals
                .iter()
                .map(|l| l.negate(self.variables[l.var].domain_size))
                .collect();
            dedup_preserving_order(&mut negated);
            out.log_offset = out.log_offset + f.weight;
            f.connective = Connective::Or;
            f.weight = -f.weight;
            f.literals = negated;
        }
        out
    }

    /// Substitutes the evidence and drops the observed variables. The result
    /// defines the conditional distribution over the remaining variables,
    /// which keep their relative order and names.
    pub fn condition(&self, evidence: &Evidence) -> Self {
        let mut remap = vec![None; self.num_vars()];
        let mut variables = Vec::new();
        for v in &self.variables {
            if evidence.get(v.id).is_none() {
                remap[v.id] = Some(variables.len());
                variables.push(Variable {
                    id: variables.len(),
                    name: v.name.clone(),
                    domain_size: v.domain_size,
                });
            }
        }

        let mut log_offset = self.log_offset;
        let mut features = Vec::new();
        'features: for f in &self.features {
            let mut kept = Vec::with_capacity(f.literals.len());
            for lit in &f.literals {
                match evidence.get(lit.var) {
                    None => kept.push(Literal {
                        var: remap[lit.var].expect("free variable"),
                        ..*lit
                    }),
                    Some(value) => match (f.connective, lit.holds(value)) {
                        // clause already true: constant contribution
                        (Connective::Or, true) => {
                            log_offset = log_offset + f.weight;
                            continue 'features;
                        }
                        // conjunction already false: never contributes
                        (Connective::And, false) => continue 'features,
                        _ => {}
                    },
                }
            }
            if kept.is_empty() {
                // OR with every literal false never fires; AND with every literal true always does
                if f.connective == Connective::And {
                    log_offset = log_offset + f.weight;
                }
                continue;
            }
            features.push(Feature {
                connective: f.connective,
                literals: kept,
                weight: f.weight,
            });
        }

        let by_name = variables.iter().map(|v| (v.name.clone(), v.id)).collect();
        GraphicalModel {
            variables,
            features,
            log_offset,
            by_name,
        }
    }

    /// Converts the weights to another scalar type.
    pub fn cast<U: Scalar>(&self) -> GraphicalModel<U> {
        GraphicalModel {
            variables: self.variables.clone(),
            features: self
                .features
                .iter()
                .map(|f| Feature {
                    connective: f.connective,
                    literals: f.literals.clone(),
                    weight: U::of(f.weight.as_f64()),
                })
                .collect(),
            log_offset: U::of(self.log_offset.as_f64()),
            by_name: self.by_name.clone(),
        }
    }
}

fn dedup_preserving_order(lits: &mut Vec<Literal>) {
    let mut seen = std::collections::HashSet::new();
    lits.retain(|l| seen.insert(*l));
}

/// Incremental construction with validation.
#[derive(Debug)]
pub struct ModelBuilder<T> {
    model: GraphicalModel<T>,
}

impl<T: Scalar> Default for ModelBuilder<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> ModelBuilder<T> {
    pub fn new() -> Self {
        ModelBuilder {
            model: GraphicalModel {
                variables: Vec::new(),
                features: Vec::new(),
                log_offset: T::zero(),
                by_name: HashMap::new(),
            },
        }
    }

    pub fn var(
        &mut self,
        name: impl Into<String>,
        domain_size: usize,
    ) -> Result<usize, ModelError> {
        let name = name.into();
        if self.model.by_name.contains_key(&name) {
            return Err(ModelError::DuplicateVariable(name));
        }
        if domain_size < 2 {
            return Err(ModelError::DomainTooSmall {
                name,
                size: domain_size,
            });
        }
        let id = self.model.variables.len();
        self.model.by_name.insert(name.clone(), id);
        self.model.variables.push(Variable {
            id,
            name,
            domain_size,
        });
        Ok(id)
    }

    pub fn var_id(&self, name: &str) -> Option<usize> {
        self.model.var_id(name)
    }

    pub fn push_feature(&mut self, feature: Feature<T>) -> Result<(), ModelError> {
        if feature.literals.is_empty() {
            return Err(ModelError::EmptyFeature);
        }
        if !feature.weight.is_finite() {
            return Err(ModelError::NonFinite);
        }
        let mut seen = std::collections::HashSet::new();
        for lit in &feature.literals {
            let var = self
                .model
                .variables
                .get(lit.var)
                .ok_or(ModelError::VariableIndex(lit.var))?;
            if lit.value >= var.domain_size {
                return Err(ModelError::ValueOutOfDomain {
                    var: var.name.clone(),
                    value: lit.value,
                    domain_size: var.domain_size,
                });
            }
            if !seen.insert(*lit) {
                return Err(ModelError::DuplicateLiteral(var.name.clone()));
            }
        }
        self.model.features.push(feature);
        Ok(())
    }

    pub fn feature(
        &mut self,
        connective: Connective,
        weight: T,
        literals: Vec<Literal>,
    ) -> Result<(), ModelError> {
        self.push_feature(Feature {
            connective,
            literals,
            weight,
        })
    }

    pub fn offset(&mut self, offset: T) -> Result<(), ModelError> {
        if !offset.is_finite() {
            return Err(ModelError::NonFinite);
        }
        self.model.log_offset = offset;
        Ok(())
    }

    pub fn build(self) -> GraphicalModel<T> {
        self.model
    }
}
