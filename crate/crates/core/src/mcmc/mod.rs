//! Gibbs sampling and the orbital chains built on it.
//!
//! A BV-MCMC(α) step is one Gibbs move followed, with probability α, by a
//! jump to a uniformly drawn member of the current state's orbit. The
//! aggregate chain picks one of K BV-MCMC(α) sub-chains uniformly per step.
//! VV-MCMC is BV-MCMC(1) under the singleton partition.
//!
//! Randomness is split into independent ChaCha streams (Gibbs moves, orbit
//! coins and exact orbit draws, sub-chain selection), so an α = 0 chain or a
//! chain over a trivial group replays the vanilla trajectory exactly.

mod gibbs;

use std::fmt::{self, Write as _};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::group::{
    GroupError, OrbitMode, OrbitSampler, PraConfig, SymmetryGroup, DEFAULT_ORBIT_CAP,
};
use crate::marginals::{MarginalCounter, MarginalEstimate};
use crate::model::{GraphicalModel, State};
use crate::partition::BlockPartition;
use crate::scalar::Scalar;
use crate::symmetry::DEFAULT_NODE_BUDGET;

pub use gibbs::{gibbs_step, GibbsSampler};

const GIBBS_STREAM: u64 = 0;
const ORBIT_STREAM: u64 = 1;
const SELECT_STREAM: u64 = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainError {
    #[error("invalid chain configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Group(#[from] GroupError),
}

#[derive(Clone, Debug, PartialEq)]
pub enum ChainKind {
    Vanilla,
    Bv {
        alpha: f64,
        partition: BlockPartition,
    },
    Aggregate {
        alpha: f64,
        partitions: Vec<BlockPartition>,
    },
}

impl ChainKind {
    pub fn vv(num_vars: usize) -> Self {
        ChainKind::Bv {
            alpha: 1.0,
            partition: BlockPartition::singleton(num_vars),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ChainKind::Vanilla => "vanilla",
            ChainKind::Bv { .. } => "bv",
            ChainKind::Aggregate { .. } => "aggregate",
        }
    }

    pub fn alpha(&self) -> f64 {
        match self {
            ChainKind::Vanilla => 0.0,
            ChainKind::Bv { alpha, .. } | ChainKind::Aggregate { alpha, .. } => *alpha,
        }
    }

    pub fn partitions(&self) -> &[BlockPartition] {
        match self {
            ChainKind::Vanilla => &[],
            ChainKind::Bv { partition, .. } => std::slice::from_ref(partition),
            ChainKind::Aggregate { partitions, .. } => partitions,
        }
    }
}

impl fmt::Display for ChainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainConfig {
    pub kind: ChainKind,
    /// Post-burn-in steps.
    pub steps: u64,
    pub burn_in: u64,
    pub seed: u64,
    pub orbit_mode: OrbitMode,
    pub report_every: u64,
    /// Count every `thinning`-th post-burn-in state.
    pub thinning: u64,
    pub pra: PraConfig,
    pub orbit_cap: usize,
    pub node_budget: u64,
}

impl ChainConfig {
    pub fn new(kind: ChainKind, steps: u64, seed: u64) -> Self {
        ChainConfig {
            kind,
            steps,
            burn_in: 0,
            seed,
            orbit_mode: OrbitMode::Pra,
            report_every: steps.max(1),
            thinning: 1,
            pra: PraConfig::default(),
            orbit_cap: DEFAULT_ORBIT_CAP,
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }

    pub fn validate(&self, num_vars: usize) -> Result<(), ChainError> {
        let bad = |m: String| Err(ChainError::Config(m));
        let alpha = self.kind.alpha();
        if !(0.0..=1.0).contains(&alpha) {
            return bad(format!("alpha {alpha} outside [0, 1]"));
        }
        if let ChainKind::Aggregate { partitions, .. } = &self.kind {
            if partitions.is_empty() {
                return bad("aggregate chain needs at least one partition".into());
            }
        }
        if let Some(p) = self
            .kind
            .partitions()
            .iter()
            .find(|p| p.num_vars() != num_vars)
        {
            return bad(format!(
                "partition covers {} variables, model has {num_vars}",
                p.num_vars()
            ));
        }
        if self.report_every == 0 || self.thinning == 0 {
            return bad("report_every and thinning must be positive".into());
        }
        Ok(())
    }
}

fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A BV-MCMC(α) sub-chain: its group and orbit sampler.
#[derive(Clone, Debug)]
pub struct SubChain {
    group: SymmetryGroup,
    sampler: OrbitSampler,
}

impl SubChain {
    pub fn group(&self) -> &SymmetryGroup {
        &self.group
    }
}

/// One BV-MCMC(α) transition: a Gibbs move, then with probability α an
/// orbit jump. With α = 0 neither the coin nor the group is touched.
pub fn bv_mcmc_step<T: Scalar, R: Rng + ?Sized>(
    gibbs: &mut GibbsSampler<T>,
    state: &mut State,
    sub: &mut SubChain,
    alpha: f64,
    gibbs_rng: &mut R,
    orbit_rng: &mut R,
) -> Result<(), GroupError> {
    gibbs.step(state, gibbs_rng);
    if alpha > 0.0 && orbit_rng.gen::<f64>() < alpha {
        sub.sampler.sample(state, orbit_rng)?;
    }
    Ok(())
}

/// A running chain of any kind over a clause-normalized model.
pub struct Chain<T> {
    gibbs: GibbsSampler<T>,
    subs: Vec<SubChain>,
    alpha: f64,
    state: State,
    gibbs_rng: ChaCha8Rng,
    orbit_rng: ChaCha8Rng,
    select_rng: ChaCha8Rng,
    selections: Vec<u64>,
    preprocess: Duration,
}

impl<T: Scalar> Chain<T> {
    /// Normalizes `model` to clauses, detects the symmetry group of every
    /// partition in the configuration and draws a uniform initial state.
    pub fn new(model: &GraphicalModel<T>, config: &ChainConfig) -> Result<Self, ChainError> {
        config.validate(model.num_vars())?;
        let start = Instant::now();
        let model = model.normalize_to_clauses();
        let groups = config
            .kind
            .partitions()
            .iter()
            .map(|p| SymmetryGroup::detect(&model, p, config.node_budget))
            .collect::<Result<Vec<_>, _>>()?;
        let preprocess = start.elapsed();
        let mut chain = Self::with_groups(model, config, groups)?;
        chain.preprocess = preprocess;
        Ok(chain)
    }

    /// Uses precomputed groups, one per configured partition (none for a
    /// vanilla chain).
    pub fn with_groups(
        model: GraphicalModel<T>,
        config: &ChainConfig,
        groups: Vec<SymmetryGroup>,
    ) -> Result<Self, ChainError> {
        config.validate(model.num_vars())?;
        let expected = match config.kind {
            ChainKind::Vanilla => 0,
            _ => config.kind.partitions().len(),
        };
        if groups.len() != expected {
            return Err(ChainError::Config(format!(
                "{} groups for {expected} partitions",
                groups.len()
            )));
        }
        let subs = groups
            .into_iter()
            .enumerate()
            .map(|(k, group)| {
                let seed = config
                    .seed
                    .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(k as u64 + 1));
                let sampler = OrbitSampler::new(
                    &group,
                    config.orbit_mode,
                    config.pra,
                    seed,
                    config.orbit_cap,
                )?;
                Ok(SubChain { group, sampler })
            })
            .collect::<Result<Vec<_>, GroupError>>()?;
        let mut gibbs_rng = stream(config.seed, GIBBS_STREAM);
        let state = State::new(
            model
                .domain_sizes()
                .into_iter()
                .map(|d| gibbs_rng.gen_range(0..d))
                .collect(),
        );
        Ok(Chain {
            gibbs: GibbsSampler::new(model),
            selections: vec![0; subs.len()],
            subs,
            alpha: config.kind.alpha(),
            state,
            gibbs_rng,
            orbit_rng: stream(config.seed, ORBIT_STREAM),
            select_rng: stream(config.seed, SELECT_STREAM),
            preprocess: Duration::ZERO,
        })
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn model(&self) -> &GraphicalModel<T> {
        self.gibbs.model()
    }

    pub fn sub_chains(&self) -> &[SubChain] {
        &self.subs
    }

    /// How often each sub-chain has been selected.
    pub fn selections(&self) -> &[u64] {
        &self.selections
    }

    /// Time spent detecting symmetries in [`Chain::new`].
    pub fn preprocess_time(&self) -> Duration {
        self.preprocess
    }

    pub fn step(&mut self) -> Result<(), ChainError> {
        match self.subs.len() {
            0 => self.gibbs.step(&mut self.state, &mut self.gibbs_rng),
            1 => self.sub_step(0)?,
            k => {
                let i = self.select_rng.gen_range(0..k);
                self.sub_step(i)?;
            }
        }
        Ok(())
    }

    fn sub_step(&mut self, k: usize) -> Result<(), GroupError> {
        self.selections[k] += 1;
        bv_mcmc_step(
            &mut self.gibbs,
            &mut self.state,
            &mut self.subs[k],
            self.alpha,
            &mut self.gibbs_rng,
            &mut self.orbit_rng,
        )
    }
}

/// Marginals after `step` post-burn-in steps.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub step: u64,
    /// Wall clock since the run started, including symmetry detection.
    pub elapsed_ms: f64,
    pub estimate: MarginalEstimate,
}

#[derive(Clone, Debug)]
pub struct ChainRun {
    pub snapshots: Vec<Snapshot>,
    pub counter: MarginalCounter,
    pub preprocess_ms: f64,
    pub sampling_ms: f64,
}

impl ChainRun {
    pub fn final_estimate(&self) -> Option<&MarginalEstimate> {
        self.snapshots.last().map(|s| &s.estimate)
    }
}

pub fn run_chain<T: Scalar>(
    model: &GraphicalModel<T>,
    config: &ChainConfig,
) -> Result<ChainRun, ChainError> {
    run_chain_since(model, config, Instant::now())
}

/// Like [`run_chain`], with snapshot times measured from `started` so that
/// earlier pipeline stages can be charged to the elapsed axis.
pub fn run_chain_since<T: Scalar>(
    model: &GraphicalModel<T>,
    config: &ChainConfig,
    started: Instant,
) -> Result<ChainRun, ChainError> {
    let chain = Chain::new(model, config)?;
    drive(chain, config, started)
}

pub fn drive<T: Scalar>(
    mut chain: Chain<T>,
    config: &ChainConfig,
    started: Instant,
) -> Result<ChainRun, ChainError> {
    let sampling_start = Instant::now();
    let names = chain.model().names();
    let mut counter = MarginalCounter::new(&chain.model().domain_sizes());
    for _ in 0..config.burn_in {
        chain.step()?;
    }
    let mut snapshots = Vec::new();
    for step in 1..=config.steps {
        chain.step()?;
        if step % config.thinning == 0 {
            counter.observe(chain.state());
        }
        if step % config.report_every == 0 || step == config.steps {
            snapshots.push(Snapshot {
                step,
                elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
                estimate: counter.estimate(names.clone()),
            });
        }
    }
    Ok(ChainRun {
        snapshots,
        counter,
        preprocess_ms: chain.preprocess_time().as_secs_f64() * 1e3,
        sampling_ms: sampling_start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Run output: a `#` preamble echoing the configuration, then
/// `step,elapsed_ms,var,value,prob` rows for every snapshot.
pub fn write_run_csv(config: &ChainConfig, run: &ChainRun) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# chain={}", config.kind);
    let _ = writeln!(out, "# alpha={}", config.kind.alpha());
    let _ = writeln!(out, "# seed={}", config.seed);
    let hashes: Vec<String> = config
        .kind
        .partitions()
        .iter()
        .map(BlockPartition::hash)
        .collect();
    let _ = writeln!(out, "# partition_hash={}", hashes.join(";"));
    let _ = writeln!(out, "# orbit_mode={}", config.orbit_mode);
    let _ = writeln!(
        out,
        "# steps={} burn_in={} thinning={}",
        config.steps, config.burn_in, config.thinning
    );
    out.push_str("step,elapsed_ms,var,value,prob\n");
    for snap in &run.snapshots {
        for (name, row) in snap.estimate.names().iter().zip(snap.estimate.probs()) {
            for (value, p) in row.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{:.3},{name},{value},{p}",
                    snap.step, snap.elapsed_ms
                );
            }
        }
    }
    out
}
