//! Reference marginals, KL evaluation and repeated experiments.
//!
//! KL between marginal tables is the mean over variables of
//! `Σ_v p_ref(v) · ln(p_ref(v) / p̂(v))`, where the estimate is smoothed by
//! adding `1e-6` to every entry and renormalizing. Confidence intervals use
//! the normal approximation `mean ± 1.96 · sd / √repeats`.

mod experiment;
mod spec;

use thiserror::Error;

use crate::marginals::{MarginalError, MarginalEstimate};
use crate::mcmc::{run_chain, ChainConfig, ChainError, ChainKind};
use crate::model::{exact_marginals, Evidence, GraphicalModel, ModelError};
use crate::partition::PartitionError;
use crate::scalar::Scalar;
use crate::symmetry::SymmetryError;

pub use experiment::{
    run_experiment, write_kl_csv, write_runs_csv, CurvePoint, ExperimentResult, KLCurve, RunRecord,
};
pub use spec::{ChainChoice, ConfigSpec, ExperimentSpec, ModelSource, PartitionChoice};

pub const KL_EPSILON: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Marginal(#[from] MarginalError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
    #[error("experiment spec line {line}: {message}")]
    Spec { line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("thread pool: {0}")]
    Pool(String),
}

/// Mean per-variable KL(reference ‖ smoothed estimate).
pub fn kl_divergence(
    reference: &MarginalEstimate,
    estimate: &MarginalEstimate,
) -> Result<f64, MarginalError> {
    reference.check_same_shape(estimate)?;
    if reference.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = reference
        .probs()
        .iter()
        .zip(estimate.probs())
        .map(|(p, q)| row_kl(p, q))
        .sum();
    Ok((total / reference.len() as f64).max(0.0))
}

fn row_kl(p: &[f64], q: &[f64]) -> f64 {
    let z: f64 = q.iter().sum::<f64>() + KL_EPSILON * q.len() as f64;
    p.iter()
        .zip(q)
        .filter(|(&pv, _)| pv > 0.0)
        .map(|(&pv, &qv)| pv * (pv * z / (qv + KL_EPSILON)).ln())
        .sum::<f64>()
        .max(0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReferenceMode {
    Exact { cap: u64 },
    LongGibbs { steps: u64, seed: u64 },
}

/// Marginals of `model` given `evidence`, one row per model variable;
/// observed variables get degenerate rows.
pub fn reference_marginals<T: Scalar>(
    model: &GraphicalModel<T>,
    evidence: &Evidence,
    mode: ReferenceMode,
) -> Result<MarginalEstimate, HarnessError> {
    match mode {
        ReferenceMode::Exact { cap } => Ok(exact_marginals(model, evidence, cap)?),
        ReferenceMode::LongGibbs { steps, seed } => {
            evidence.validate(model)?;
            let reduced = model.condition(evidence);
            let run = run_chain(&reduced, &ChainConfig::new(ChainKind::Vanilla, steps, seed))?;
            let free = run.counter.estimate(reduced.names());
            let probs = (0..model.num_vars())
                .map(|v| match evidence.get(v) {
                    Some(x) => (0..model.domain_size(v))
                        .map(|i| f64::from(i == x))
                        .collect(),
                    None => free
                        .row_by_name(model.var_name(v))
                        .expect("free variable kept by conditioning")
                        .to_vec(),
                })
                .collect();
            Ok(MarginalEstimate::new(model.names(), probs, free.samples()))
        }
    }
}

/// Sample mean with a normal-approximation 95% interval.
pub fn mean_ci(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, mean, mean);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let half = 1.96 * var.sqrt() / n.sqrt();
    (mean, mean - half, mean + half)
}
