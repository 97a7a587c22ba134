use rand::Rng;

use crate::model::{Connective, Feature, GraphicalModel, State};
use crate::scalar::Scalar;

/// Random-scan single-site Gibbs kernel with precomputed feature blankets.
#[derive(Clone, Debug)]
pub struct GibbsSampler<T> {
    model: GraphicalModel<T>,
    blankets: Vec<Vec<usize>>,
    logits: Vec<f64>,
}

impl<T: Scalar> GibbsSampler<T> {
    pub fn new(model: GraphicalModel<T>) -> Self {
        let blankets = model.feature_blankets();
        let width = model.domain_sizes().into_iter().max().unwrap_or(0);
        GibbsSampler {
            model,
            blankets,
            logits: vec![0.0; width],
        }
    }

    pub fn model(&self) -> &GraphicalModel<T> {
        &self.model
    }

    /// Full conditional of `var` given the rest of `state`.
    pub fn conditional(&mut self, var: usize, state: &State) -> Vec<f64> {
        self.fill_logits(var, state);
        let d = self.model.domain_size(var);
        let logits = &self.logits[..d];
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut p: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
        let z: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= z);
        p
    }

    fn fill_logits(&mut self, var: usize, state: &State) {
        let d = self.model.domain_size(var);
        let logits = &mut self.logits[..d];
        logits.fill(0.0);
        for &j in &self.blankets[var] {
            let f = &self.model.features()[j];
            add_feature(f, var, state, logits);
        }
    }

    /// Picks a variable uniformly and resamples it from its full conditional.
    pub fn step<R: Rng + ?Sized>(&mut self, state: &mut State, rng: &mut R) {
        let n = self.model.num_vars();
        if n == 0 {
            return;
        }
        let var = rng.gen_range(0..n);
        self.fill_logits(var, state);
        let d = self.model.domain_size(var);
        let logits = &mut self.logits[..d];
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for l in logits.iter_mut() {
            *l = (*l - max).exp();
            z += *l;
        }
        let mut u = rng.gen::<f64>() * z;
        let mut value = d - 1;
        for (v, &w) in logits.iter().enumerate() {
            if u < w {
                value = v;
                break;
            }
            u -= w;
        }
        state.set(var, value);
    }
}

/// Adds the feature's weight to `logits[v]` for every value `v` of `var`
/// that satisfies it given the other variables in `state`.
fn add_feature<T: Scalar>(f: &Feature<T>, var: usize, state: &State, logits: &mut [f64]) {
    let w = f.weight.as_f64();
    let others = f.literals.iter().filter(|l| l.var != var);
    let own = || f.literals.iter().filter(|l| l.var == var);
    match f.connective {
        Connective::Or => {
            if others.into_iter().any(|l| l.holds(state[l.var])) {
                logits.iter_mut().for_each(|x| *x += w);
            } else {
                for (v, x) in logits.iter_mut().enumerate() {
                    if own().any(|l| l.holds(v)) {
                        *x += w;
                    }
                }
            }
        }
        Connective::And => {
            if others.into_iter().all(|l| l.holds(state[l.var])) {
                for (v, x) in logits.iter_mut().enumerate() {
                    if own().all(|l| l.holds(v)) {
                        *x += w;
                    }
                }
            }
        }
    }
}

/// One random-scan Gibbs step. Recomputes the variable's blanket on every
/// call; chains use [`GibbsSampler`] instead.
pub fn gibbs_step<T: Scalar, R: Rng + ?Sized>(
    model: &GraphicalModel<T>,
    state: &mut State,
    rng: &mut R,
) {
    let n = model.num_vars();
    if n == 0 {
        return;
    }
    let var = rng.gen_range(0..n);
    let d = model.domain_size(var);
    let mut logits = vec![0.0; d];
    for f in model.features() {
        if f.literals.iter().any(|l| l.var == var) {
            add_feature(f, var, state, &mut logits);
        }
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let mut u = rng.gen::<f64>() * weights.iter().sum::<f64>();
    let mut value = d - 1;
    for (v, &w) in weights.iter().enumerate() {
        if u < w {
            value = v;
            break;
        }
        u -= w;
    }
    state.set(var, value);
}
