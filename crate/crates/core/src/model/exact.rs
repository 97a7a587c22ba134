//! Exact marginals by enumeration.
//!
//! Free variables are split into connected components of the feature
//! interaction graph; components are independent given the evidence, so each
//! is enumerated on its own. The state cap applies per component.

use super::{Evidence, GraphicalModel, ModelError, State};
use crate::marginals::MarginalEstimate;
use crate::scalar::Scalar;

/// Default cap on enumerated joint states (2^24).
pub const DEFAULT_STATE_CAP: u64 = 1 << 24;

struct DisjointSets(Vec<usize>);

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets((0..n).collect())
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.0[root] != root {
            root = self.0[root];
        }
        let mut cur = x;
        while self.0[cur] != root {
            let next = self.0[cur];
            self.0[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Marginals of the model conditioned on `evidence`. Observed variables get
/// degenerate rows.
pub fn exact_marginals<T: Scalar>(
    model: &GraphicalModel<T>,
    evidence: &Evidence,
    cap: u64,
) -> Result<MarginalEstimate, ModelError> {
    evidence.validate(model)?;
    let n = model.num_vars();

    let mut sets = DisjointSets::new(n);
    let mut touching_free: Vec<Vec<usize>> = Vec::with_capacity(model.features().len());
    for f in model.features() {
        let free: Vec<usize> = f
            .vars()
            .into_iter()
            .filter(|&v| evidence.get(v).is_none())
            .collect();
        for w in free.windows(2) {
            sets.union(w[0], w[1]);
        }
        touching_free.push(free);
    }

    let mut components: Vec<Vec<usize>> = Vec::new();
    let mut component_of = vec![usize::MAX; n];
    for v in 0..n {
        if evidence.get(v).is_some() {
            continue;
        }
        let root = sets.find(v);
        if component_of[root] == usize::MAX {
            component_of[root] = components.len();
            components.push(Vec::new());
        }
        let c = component_of[root];
        component_of[v] = c;
        components[c].push(v);
    }
    let mut component_features = vec![Vec::new(); components.len()];
    for (j, free) in touching_free.iter().enumerate() {
        if let Some(&v) = free.first() {
            component_features[component_of[v]].push(j);
        }
    }

    let mut probs: Vec<Vec<f64>> = model
        .variables()
        .iter()
        .map(|v| vec![0.0; v.domain_size])
        .collect();
    for (var, value) in evidence.iter() {
        probs[var][value] = 1.0;
    }

    let mut base = State::zeros(n);
    for (var, value) in evidence.iter() {
        base.set(var, value);
    }
    for (vars, features) in components.iter().zip(&component_features) {
        let states: u128 = vars
            .iter()
            .map(|&v| model.domain_size(v) as u128)
            .try_fold(1u128, |a, d| a.checked_mul(d))
            .unwrap_or(u128::MAX);
        if states > cap as u128 {
            return Err(ModelError::StateSpaceTooLarge { states, cap });
        }
        enumerate_component(model, vars, features, &mut base, &mut probs);
    }

    Ok(MarginalEstimate::new(model.names(), probs, 0))
}

/// Odometer enumeration over `vars` with incremental log-weight updates and
/// a streaming log-sum-exp per (variable, value).
fn enumerate_component<T: Scalar>(
    model: &GraphicalModel<T>,
    vars: &[usize],
    features: &[usize],
    state: &mut State,
    probs: &mut [Vec<f64>],
) {
    let all = model.features();
    // features touching each position of `vars`
    let mut touching: Vec<Vec<usize>> = vec![Vec::new(); vars.len()];
    for &j in features {
        for v in all[j].vars() {
            if let Some(pos) = vars.iter().position(|&x| x == v) {
                touching[pos].push(j);
            }
        }
    }

    for &v in vars {
        state.set(v, 0);
    }
    let mut satisfied: Vec<bool> = vec![false; all.len()];
    let mut log_weight = T::zero();
    for &j in features {
        satisfied[j] = all[j].is_satisfied(state);
        if satisfied[j] {
            log_weight = log_weight + all[j].weight;
        }
    }

    // acc[pos][value] = Σ exp(log_weight - running_max)
    let mut acc: Vec<Vec<T>> = vars
        .iter()
        .map(|&v| vec![T::zero(); model.domain_size(v)])
        .collect();
    let mut running_max = T::neg_infinity();

    loop {
        if log_weight > running_max {
            let scale = if running_max == T::neg_infinity() {
                T::zero()
            } else {
                (running_max - log_weight).exp()
            };
            for row in &mut acc {
                for x in row.iter_mut() {
                    *x = *x * scale;
                }
            }
            running_max = log_weight;
        }
        let term = (log_weight - running_max).exp();
        for (pos, &v) in vars.iter().enumerate() {
            let cell = &mut acc[pos][state[v]];
            *cell = *cell + term;
        }

        // advance the odometer (last variable fastest)
        let mut pos = vars.len();
        loop {
            if pos == 0 {
                write_rows(vars, &acc, probs);
                return;
            }
            pos -= 1;
            let v = vars[pos];
            let next = state[v] + 1;
            let wrapped = next == model.domain_size(v);
            state.set(v, if wrapped { 0 } else { next });
            for &j in &touching[pos] {
                let now = all[j].is_satisfied(state);
                if now != satisfied[j] {
                    log_weight = if now {
                        log_weight + all[j].weight
                    } else {
                        log_weight - all[j].weight
                    };
                    satisfied[j] = now;
                }
            }
            if !wrapped {
                break;
            }
        }
    }
}

fn write_rows<T: Scalar>(vars: &[usize], acc: &[Vec<T>], probs: &mut [Vec<f64>]) {
    for (pos, &v) in vars.iter().enumerate() {
        let total = acc[pos].iter().fold(T::zero(), |a, &b| a + b);
        probs[v] = acc[pos].iter().map(|&x| (x / total).as_f64()).collect();
    }
}
