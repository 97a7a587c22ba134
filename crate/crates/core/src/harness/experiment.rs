use std::fmt::Write as _;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::spec::{ChainChoice, ConfigSpec, ExperimentSpec, ModelSource, PartitionChoice};
use super::{kl_divergence, mean_ci, reference_marginals, HarnessError, ReferenceMode, KL_EPSILON};
use crate::group::{largest_support, SymmetryGroup};
use crate::marginals::{MarginalCounter, MarginalEstimate};
use crate::mcmc::{drive, Chain, ChainConfig, ChainKind};
use crate::model::generators::{job_search, student_curriculum};
use crate::model::{parse_model, Evidence, GraphicalModel};
use crate::partition::{generate_block_partitions, BlockPartition, HeuristicConfig};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint {
    pub checkpoint: f64,
    pub mean: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KLCurve {
    pub config: String,
    /// Indexed by post-burn-in sample count.
    pub samples: Vec<CurvePoint>,
    /// Indexed by wall-clock ms since the configuration's pipeline started.
    pub time: Vec<CurvePoint>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub config: String,
    pub repeat: usize,
    pub seed: u64,
    pub generate_ms: f64,
    pub reference_ms: f64,
    pub partitions_ms: f64,
    pub symmetries_ms: f64,
    pub sampling_ms: f64,
    /// Partitions + symmetries + sampling.
    pub total_ms: f64,
    /// KL at each sample checkpoint.
    pub checkpoint_kl: Vec<f64>,
    /// `(elapsed_ms, kl)` per snapshot.
    pub trace: Vec<(f64, f64)>,
    /// KL of the uniform table, used before the first snapshot.
    pub initial_kl: f64,
    pub num_generators: usize,
}

impl RunRecord {
    fn kl_at_time(&self, t: f64) -> f64 {
        self.trace
            .iter()
            .take_while(|(ms, _)| *ms <= t)
            .last()
            .map_or(self.initial_kl, |&(_, kl)| kl)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResult {
    pub curves: Vec<KLCurve>,
    pub runs: Vec<RunRecord>,
    pub repeats: usize,
}

impl ExperimentResult {
    pub fn curve(&self, config: &str) -> Option<&KLCurve> {
        self.curves.iter().find(|c| c.config == config)
    }
}

struct Prepared {
    model: GraphicalModel<f64>,
    reference: MarginalEstimate,
    generate_ms: f64,
    reference_ms: f64,
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn prepare(
    spec: &ExperimentSpec,
    fixed: Option<&GraphicalModel<f64>>,
    seed: u64,
) -> Result<Prepared, HarnessError> {
    let t0 = Instant::now();
    let seed = spec.model_seed.unwrap_or(seed);
    let model = match (&spec.model, fixed) {
        (_, Some(m)) => m.clone(),
        (ModelSource::JobSearch(p), None) => {
            job_search(&crate::model::generators::JobSearchParams { seed, ..p.clone() })
        }
        (ModelSource::StudentCurriculum(p), None) => {
            student_curriculum(&crate::model::generators::StudentCurriculumParams {
                seed,
                ..p.clone()
            })
        }
        (ModelSource::File(_), None) => unreachable!("file models are loaded up front"),
    };
    let evidence = if spec.evidence_fraction > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(7);
        Evidence::sample(&model, spec.evidence_fraction, &mut rng)
    } else {
        Evidence::new()
    };
    let model = model.condition(&evidence).normalize_to_clauses();
    let generate_ms = ms_since(t0);
    let t1 = Instant::now();
    let mode = match spec.reference {
        ReferenceMode::LongGibbs { steps, .. } => ReferenceMode::LongGibbs {
            steps,
            seed: seed ^ 0x005E_ED0F_2EF5,
        },
        m => m,
    };
    let reference = reference_marginals(&model, &Evidence::new(), mode)?;
    Ok(Prepared {
        model,
        reference,
        generate_ms,
        reference_ms: ms_since(t1),
    })
}

fn run_one(
    spec: &ExperimentSpec,
    config: &ConfigSpec,
    prep: &Prepared,
    repeat: usize,
    seed: u64,
) -> Result<RunRecord, HarnessError> {
    let model = &prep.model;
    let n = model.num_vars();
    let start = Instant::now();
    let heuristic = || {
        generate_block_partitions(
            model,
            &HeuristicConfig {
                max_block: spec.max_block,
                num_partitions: spec.num_partitions,
                seed,
                max_rejections: None,
            },
        )
    };
    let (alpha, partitions) = match config.chain {
        ChainChoice::Vanilla => (0.0, Vec::new()),
        ChainChoice::Vv => (1.0, vec![BlockPartition::singleton(n)]),
        ChainChoice::Bv {
            alpha,
            partition: PartitionChoice::Singleton,
        } => (alpha, vec![BlockPartition::singleton(n)]),
        ChainChoice::Bv { alpha, .. } | ChainChoice::Aggregate { alpha } => (alpha, heuristic()),
    };
    let t_part = Instant::now();
    let mut groups = partitions
        .iter()
        .map(|p| SymmetryGroup::detect(model, p, spec.node_budget))
        .collect::<Result<Vec<_>, _>>()
        .map_err(crate::mcmc::ChainError::from)?;
    let kind = match config.chain {
        ChainChoice::Vanilla => ChainKind::Vanilla,
        ChainChoice::Aggregate { .. } => ChainKind::Aggregate { alpha, partitions },
        _ => {
            let best = largest_support(&groups).expect("at least one partition");
            let group = groups.swap_remove(best);
            groups = vec![group];
            ChainKind::Bv {
                alpha,
                partition: partitions[best].clone(),
            }
        }
    };
    let num_generators = groups.iter().map(|g| g.generators().len()).sum();
    let resolution = (spec.steps / 200).max(1);
    let report_every = spec.checkpoints.iter().fold(resolution, |g, &c| gcd(g, c));
    let chain_config = ChainConfig {
        burn_in: spec.burn_in,
        orbit_mode: config.orbit_mode.unwrap_or(spec.orbit_mode),
        report_every,
        node_budget: spec.node_budget,
        ..ChainConfig::new(kind, spec.steps, seed)
    };
    let chain = Chain::with_groups(model.clone(), &chain_config, groups)?;
    let t_sym = Instant::now();
    let run = drive(chain, &chain_config, start)?;
    let t_end = Instant::now();

    let mut trace = Vec::with_capacity(run.snapshots.len());
    let mut checkpoint_kl = Vec::with_capacity(spec.checkpoints.len());
    for snap in &run.snapshots {
        let kl = kl_divergence(&prep.reference, &snap.estimate)?;
        trace.push((snap.elapsed_ms, kl));
        if spec.checkpoints.binary_search(&snap.step).is_ok() {
            checkpoint_kl.push(kl);
        }
    }
    let uniform = MarginalCounter::new(&model.domain_sizes()).estimate(model.names());
    let dur = |a: Instant, b: Instant| (b - a).as_secs_f64() * 1e3;
    Ok(RunRecord {
        config: config.name.clone(),
        repeat,
        seed,
        generate_ms: prep.generate_ms,
        reference_ms: prep.reference_ms,
        partitions_ms: dur(start, t_part),
        symmetries_ms: dur(t_part, t_sym),
        sampling_ms: dur(t_sym, t_end),
        total_ms: dur(start, t_end),
        checkpoint_kl,
        trace,
        initial_kl: kl_divergence(&prep.reference, &uniform)?,
        num_generators,
    })
}

/// Runs every configuration once per seed, `jobs` runs at a time (0 picks
/// the number of cores). Results do not depend on `jobs` apart from timings.
pub fn run_experiment(
    spec: &ExperimentSpec,
    jobs: usize,
) -> Result<ExperimentResult, HarnessError> {
    let fixed = match &spec.model {
        ModelSource::File(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
                path: path.display().to_string(),
                source,
            })?;
            Some(parse_model::<f64>(&text)?)
        }
        _ => None,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    let runs = pool.install(|| -> Result<Vec<RunRecord>, HarnessError> {
        let prepared = spec
            .seeds
            .par_iter()
            .map(|&seed| prepare(spec, fixed.as_ref(), seed))
            .collect::<Result<Vec<_>, _>>()?;
        let tasks: Vec<(usize, usize)> = (0..spec.configs.len())
            .flat_map(|c| (0..spec.seeds.len()).map(move |r| (c, r)))
            .collect();
        tasks
            .par_iter()
            .map(|&(c, r)| run_one(spec, &spec.configs[c], &prepared[r], r, spec.seeds[r]))
            .collect()
    })?;

    let time_points = if spec.time_points.is_empty() {
        let horizon = runs
            .iter()
            .filter_map(|r| r.trace.last().map(|t| t.0))
            .fold(f64::INFINITY, f64::min);
        (1..=10).map(|i| horizon * i as f64 / 10.0).collect()
    } else {
        spec.time_points.clone()
    };
    let curves = spec
        .configs
        .iter()
        .map(|cfg| {
            let mine: Vec<&RunRecord> = runs.iter().filter(|r| r.config == cfg.name).collect();
            let point = |checkpoint: f64, xs: Vec<f64>| {
                let (mean, ci_lo, ci_hi) = mean_ci(&xs);
                CurvePoint {
                    checkpoint,
                    mean,
                    ci_lo,
                    ci_hi,
                }
            };
            KLCurve {
                config: cfg.name.clone(),
                samples: spec
                    .checkpoints
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| {
                        point(c as f64, mine.iter().map(|r| r.checkpoint_kl[i]).collect())
                    })
                    .collect(),
                time: time_points
                    .iter()
                    .map(|&t| point(t, mine.iter().map(|r| r.kl_at_time(t)).collect()))
                    .collect(),
            }
        })
        .collect();
    Ok(ExperimentResult {
        curves,
        runs,
        repeats: spec.seeds.len(),
    })
}

/// `config,checkpoint,axis,mean_kl,ci_lo,ci_hi` with `axis` either
/// `samples` or `ms`.
pub fn write_kl_csv(result: &ExperimentResult) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# kl: mean over variables of KL(reference || estimate); estimate smoothed with eps={KL_EPSILON:e}"
    );
    let _ = writeln!(
        out,
        "# ci: normal approximation mean +- 1.96*sd/sqrt(repeats); repeats={}",
        result.repeats
    );
    out.push_str("config,checkpoint,axis,mean_kl,ci_lo,ci_hi\n");
    for curve in &result.curves {
        for (axis, points) in [("samples", &curve.samples), ("ms", &curve.time)] {
            for p in points {
                let _ = writeln!(
                    out,
                    "{},{},{axis},{},{},{}",
                    curve.config, p.checkpoint, p.mean, p.ci_lo, p.ci_hi
                );
            }
        }
    }
    out
}

/// Per-run stage timings.
pub fn write_runs_csv(result: &ExperimentResult) -> String {
    let mut out = String::from(
        "config,repeat,seed,generators,generate_ms,reference_ms,partitions_ms,symmetries_ms,sampling_ms,total_ms,final_kl\n",
    );
    for r in &result.runs {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.3},{:.3},{:.3},{:.3},{:.3},{:.3},{}",
            r.config,
            r.repeat,
            r.seed,
            r.num_generators,
            r.generate_ms,
            r.reference_ms,
            r.partitions_ms,
            r.symmetries_ms,
            r.sampling_ms,
            r.total_ms,
            r.checkpoint_kl.last().copied().unwrap_or(f64::NAN)
        );
    }
    out
}
