use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use bvmc_core::group::{
    largest_support, orbit_enumerate, OrbitMode, SymmetryGroup, DEFAULT_ORBIT_CAP,
};
use bvmc_core::harness::{
    kl_divergence, run_experiment, write_kl_csv, write_runs_csv, ExperimentSpec, ReferenceMode,
};
use bvmc_core::marginals::MarginalEstimate;
use bvmc_core::mcmc::{drive, write_run_csv, Chain, ChainConfig, ChainKind, ChainRun, Snapshot};
use bvmc_core::model::generators::{
    job_search, student_curriculum, JobSearchParams, StudentCurriculumParams,
};
use bvmc_core::model::{exact_marginals, parse_evidence, parse_model, Evidence, DEFAULT_STATE_CAP};
use bvmc_core::partition::{
    generate_block_partitions, parse_candidate_set, parse_partition, write_candidate_set,
    BlockPartition, HeuristicConfig,
};
use bvmc_core::symmetry::{build_bv_graph, write_symmetry_file, DEFAULT_NODE_BUDGET};
use bvmc_core::{Model, State};

use super::{
    ChainArg, Command, Domain, EvalArgs, ExactArgs, GenArgs, HeuristicArgs, OrbitArgs,
    OrbitModeArg, PartitionSource, PartitionsArgs, RunArgs, SymmetriesArgs,
};

pub struct CliError {
    pub code: &'static str,
    pub message: String,
}

fn fail(code: &'static str, message: impl Display) -> CliError {
    CliError {
        code,
        message: message.to_string(),
    }
}

trait Context<T> {
    fn code(self, code: &'static str) -> Result<T, CliError>;
    fn code_at(self, code: &'static str, path: &Path) -> Result<T, CliError>;
}

impl<T, E: Display> Context<T> for Result<T, E> {
    fn code(self, code: &'static str) -> Result<T, CliError> {
        self.map_err(|e| fail(code, e))
    }

    fn code_at(self, code: &'static str, path: &Path) -> Result<T, CliError> {
        self.map_err(|e| fail(code, format!("{}: {e}", path.display())))
    }
}

type CliResult = Result<(), CliError>;

pub fn dispatch(command: Command) -> CliResult {
    match command {
        Command::Gen(a) => gen(a),
        Command::Partitions(a) => partitions(a),
        Command::Symmetries(a) => symmetries(a),
        Command::Exact(a) => exact(a),
        Command::Run(a) => run(a),
        Command::Eval(a) => eval(a),
        Command::Orbit(a) => orbit(a),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).code_at("E_IO", path)
}

/// Fails early when the output's directory does not exist.
fn check_output(path: Option<&PathBuf>) -> CliResult {
    if let Some(p) = path {
        let dir = p.parent().filter(|d| !d.as_os_str().is_empty());
        if dir.is_some_and(|d| !d.is_dir()) {
            return Err(fail(
                "E_IO",
                format!("{}: directory does not exist", p.display()),
            ));
        }
    }
    Ok(())
}

fn emit(path: Option<&PathBuf>, text: &str) -> CliResult {
    match path {
        Some(p) => std::fs::write(p, text).code_at("E_IO", p),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn state_cap() -> Result<u64, CliError> {
    match std::env::var("BVMC_STATE_CAP") {
        Ok(v) => v.trim().parse().map_err(|_| {
            fail(
                "E_ARG",
                format!("BVMC_STATE_CAP: not a positive integer: `{v}`"),
            )
        }),
        Err(_) => Ok(DEFAULT_STATE_CAP),
    }
}

fn load_model(path: &Path) -> Result<Model, CliError> {
    parse_model(&read(path)?).code_at("E_MODEL", path)
}

fn load_evidence(path: Option<&PathBuf>, model: &Model) -> Result<Evidence, CliError> {
    match path {
        Some(p) => parse_evidence(&read(p)?, model).code_at("E_EVIDENCE", p),
        None => Ok(Evidence::new()),
    }
}

fn gen(a: GenArgs) -> CliResult {
    check_output(a.output.as_ref())?;
    for p in [a.edge_prob, a.friend_prob].into_iter().flatten() {
        if !(0.0..=1.0).contains(&p) {
            return Err(fail("E_ARG", format!("probability {p} outside [0, 1]")));
        }
    }
    let model: Model = match a.domain {
        Domain::JobSearch => {
            let d = JobSearchParams::default();
            job_search(&JobSearchParams {
                n_people: a.n,
                edge_prob: a.edge_prob.unwrap_or(d.edge_prob),
                seed: a.seed,
                ..d
            })
        }
        Domain::StudentCurriculum => {
            let d = StudentCurriculumParams::default();
            student_curriculum(&StudentCurriculumParams {
                n_students: a.n,
                friend_prob: a.friend_prob.unwrap_or(d.friend_prob),
                seed: a.seed,
                ..d
            })
        }
    };
    emit(a.output.as_ref(), &model.to_string())
}

fn heuristic(model: &Model, h: &HeuristicArgs, seed: u64) -> Result<Vec<BlockPartition>, CliError> {
    if h.max_block == 0 || h.count == 0 {
        return Err(fail("E_ARG", "--max-block and --count must be positive"));
    }
    Ok(generate_block_partitions(
        model,
        &HeuristicConfig {
            max_block: h.max_block,
            num_partitions: h.count,
            seed,
            max_rejections: None,
        },
    ))
}

fn partitions(a: PartitionsArgs) -> CliResult {
    check_output(a.output.as_ref())?;
    let model = load_model(&a.model)?.normalize_to_clauses();
    let parts = heuristic(&model, &a.heuristic, a.seed)?;
    emit(a.output.as_ref(), &write_candidate_set(&parts, &model))
}

/// Explicit partitions from the flags, or `None` when none were given.
fn explicit_partitions(
    src: &PartitionSource,
    model: &Model,
) -> Result<Option<Vec<BlockPartition>>, CliError> {
    if src.singleton_partition {
        return Ok(Some(vec![BlockPartition::singleton(model.num_vars())]));
    }
    if let Some(p) = &src.partition {
        return Ok(Some(vec![
            parse_partition(&read(p)?, model).code_at("E_PARTITION", p)?
        ]));
    }
    if let Some(p) = &src.candidates {
        let parts = parse_candidate_set(&read(p)?, model).code_at("E_PARTITION", p)?;
        if parts.is_empty() {
            return Err(fail(
                "E_PARTITION",
                format!("{}: no partitions", p.display()),
            ));
        }
        return Ok(Some(parts));
    }
    Ok(None)
}

fn symmetries(a: SymmetriesArgs) -> CliResult {
    check_output(a.output.as_ref())?;
    check_output(a.export_graph.as_ref())?;
    let model = load_model(&a.model)?.normalize_to_clauses();
    let parts = match explicit_partitions(&a.source, &model)? {
        Some(p) => p,
        None => heuristic(&model, &a.heuristic, a.seed)?,
    };
    let budget = a.node_budget.unwrap_or(DEFAULT_NODE_BUDGET);
    if let Some(path) = &a.export_graph {
        let g = build_bv_graph(&model, &parts[0]).code("E_SYMMETRY")?;
        std::fs::write(path, g.graph().to_text()).code_at("E_IO", path)?;
    }
    let mut sections = Vec::with_capacity(parts.len());
    for p in &parts {
        let group = SymmetryGroup::detect(&model, p, budget).code("E_SYMMETRY")?;
        sections.push((p.hash(), group.generators().to_vec()));
    }
    emit(a.output.as_ref(), &write_symmetry_file(&sections))
}

fn exact(a: ExactArgs) -> CliResult {
    check_output(a.output.as_ref())?;
    let model = load_model(&a.model)?;
    let evidence = load_evidence(a.evidence.as_ref(), &model)?;
    let cap = state_cap()?;
    let marginals = exact_marginals(&model, &evidence, cap).code("E_CAP")?;
    emit(a.output.as_ref(), &marginals.to_text())
}

fn run(a: RunArgs) -> CliResult {
    check_output(a.output.as_ref())?;
    if !(0.0..=1.0).contains(&a.alpha) {
        return Err(fail("E_ARG", format!("--alpha {} outside [0, 1]", a.alpha)));
    }
    if a.repeats == 0 || a.steps == 0 || a.thinning == 0 || a.report_every == Some(0) {
        return Err(fail(
            "E_ARG",
            "--repeats, --steps, --thinning and --report-every must be positive",
        ));
    }
    let base = load_model(&a.model)?;
    let evidence = load_evidence(a.evidence.as_ref(), &base)?;
    let explicit = explicit_partitions(&a.source, &base)?;
    let started = Instant::now();
    let model = base.condition(&evidence).normalize_to_clauses();
    // partitions from files name the original variables; re-read them against
    // the reduced model when evidence removed variables
    let explicit = match explicit {
        Some(parts) if !evidence.is_empty() => Some(reduce_partitions(&parts, &base, &model)?),
        other => other,
    };
    let n = model.num_vars();
    let budget = a.node_budget.unwrap_or(DEFAULT_NODE_BUDGET);
    let detect = |parts: &[BlockPartition]| -> Result<Vec<SymmetryGroup>, CliError> {
        parts
            .iter()
            .map(|p| SymmetryGroup::detect(&model, p, budget).code("E_SYMMETRY"))
            .collect()
    };

    let (kind, groups) = match a.chain {
        ChainArg::Vanilla => (ChainKind::Vanilla, Vec::new()),
        ChainArg::Vv => (ChainKind::vv(n), detect(&[BlockPartition::singleton(n)])?),
        ChainArg::Bv => {
            let parts = match explicit {
                Some(p) => p,
                None => heuristic(&model, &a.heuristic, a.seed)?,
            };
            let mut groups = detect(&parts)?;
            let best = largest_support(&groups).expect("at least one partition");
            let group = groups.swap_remove(best);
            (
                ChainKind::Bv {
                    alpha: a.alpha,
                    partition: parts[best].clone(),
                },
                vec![group],
            )
        }
        ChainArg::Aggregate => {
            let parts = match explicit {
                Some(p) => p,
                None => heuristic(&model, &a.heuristic, a.seed)?,
            };
            let groups = detect(&parts)?;
            (
                ChainKind::Aggregate {
                    alpha: a.alpha,
                    partitions: parts,
                },
                groups,
            )
        }
    };
    let base_config = ChainConfig {
        burn_in: a.burn_in,
        orbit_mode: match a.orbit_mode {
            OrbitModeArg::Pra => OrbitMode::Pra,
            OrbitModeArg::Exact => OrbitMode::Exact,
        },
        report_every: a.report_every.unwrap_or(a.steps),
        thinning: a.thinning,
        orbit_cap: orbit_cap()?,
        node_budget: budget,
        ..ChainConfig::new(kind, a.steps, a.seed)
    };

    let runs = parallel(a.repeats, a.jobs, |r| {
        let config = ChainConfig {
            seed: a.seed.wrapping_add(r as u64),
            ..base_config.clone()
        };
        let chain = Chain::with_groups(model.clone(), &config, groups.clone()).code("E_CHAIN")?;
        drive(chain, &config, started).code("E_CHAIN")
    })?;
    let pooled = pool(runs);
    let mut csv = write_run_csv(&base_config, &pooled);
    if a.repeats > 1 {
        csv.insert_str(0, &format!("# repeats={}\n", a.repeats));
    }
    emit(a.output.as_ref(), &csv)
}

fn orbit_cap() -> Result<usize, CliError> {
    match std::env::var("BVMC_STATE_CAP") {
        Ok(_) => Ok(usize::try_from(state_cap()?).unwrap_or(usize::MAX)),
        Err(_) => Ok(DEFAULT_ORBIT_CAP),
    }
}

fn reduce_partitions(
    parts: &[BlockPartition],
    base: &Model,
    reduced: &Model,
) -> Result<Vec<BlockPartition>, CliError> {
    parts
        .iter()
        .map(|p| {
            let text: String = p
                .to_text(base)
                .lines()
                .filter_map(|line| {
                    let kept: Vec<&str> = line
                        .split_whitespace()
                        .skip(1)
                        .filter(|name| reduced.var_id(name).is_some())
                        .collect();
                    (!kept.is_empty()).then(|| format!("block {}\n", kept.join(" ")))
                })
                .collect();
            parse_partition(&text, reduced).code("E_PARTITION")
        })
        .collect()
}

/// Runs `f(0..count)` on up to `jobs` threads (0 = all cores), keeping order.
fn parallel<T: Send>(
    count: usize,
    jobs: usize,
    f: impl Fn(usize) -> Result<T, CliError> + Sync,
) -> Result<Vec<T>, CliError> {
    let workers = match jobs {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        j => j,
    }
    .min(count);
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<T, CliError>>>> =
        Mutex::new((0..count).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= count {
                    break;
                }
                let r = f(i);
                results.lock().expect("worker panicked")[i] = Some(r);
            });
        }
    });
    results
        .into_inner()
        .expect("worker panicked")
        .into_iter()
        .map(|r| r.expect("every index is processed"))
        .collect()
}

/// Pools independent runs with identical schedules by averaging snapshot
/// tables (equal sample counts make this the pooled frequency).
fn pool(mut runs: Vec<ChainRun>) -> ChainRun {
    if runs.len() == 1 {
        return runs.pop().expect("one run");
    }
    let k = runs.len() as f64;
    let mut first = runs.remove(0);
    for (i, snap) in first.snapshots.iter_mut().enumerate() {
        let others: Vec<&Snapshot> = runs.iter().map(|r| &r.snapshots[i]).collect();
        let probs = snap
            .estimate
            .probs()
            .iter()
            .enumerate()
            .map(|(v, row)| {
                row.iter()
                    .enumerate()
                    .map(|(x, p)| {
                        (p + others.iter().map(|o| o.estimate.row(v)[x]).sum::<f64>()) / k
                    })
                    .collect()
            })
            .collect();
        let samples =
            snap.estimate.samples() + others.iter().map(|o| o.estimate.samples()).sum::<u64>();
        snap.elapsed_ms = others
            .iter()
            .map(|o| o.elapsed_ms)
            .fold(snap.elapsed_ms, f64::max);
        snap.estimate = MarginalEstimate::new(snap.estimate.names().to_vec(), probs, samples);
    }
    for r in &runs {
        first.counter.merge(&r.counter);
        first.preprocess_ms = first.preprocess_ms.max(r.preprocess_ms);
        first.sampling_ms = first.sampling_ms.max(r.sampling_ms);
    }
    first
}

/// Last snapshot of a run CSV as a marginal table.
fn parse_run_csv(text: &str) -> Result<MarginalEstimate, String> {
    let mut rows: Vec<(u64, String, usize, f64)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("step,") {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let bad = || format!("line {}: expected step,elapsed_ms,var,value,prob", i + 1);
        if f.len() != 5 {
            return Err(bad());
        }
        rows.push((
            f[0].parse().map_err(|_| bad())?,
            f[2].to_owned(),
            f[3].parse().map_err(|_| bad())?,
            f[4].parse().map_err(|_| bad())?,
        ));
    }
    let last = rows.iter().map(|r| r.0).max().ok_or("no snapshot rows")?;
    let mut names: Vec<String> = Vec::new();
    let mut probs: Vec<Vec<f64>> = Vec::new();
    for (_, name, value, p) in rows.into_iter().filter(|r| r.0 == last) {
        if names.last() != Some(&name) {
            names.push(name);
            probs.push(Vec::new());
        }
        let row = probs.last_mut().expect("row pushed");
        if value != row.len() {
            return Err(format!(
                "values of `{}` out of order",
                names.last().expect("name")
            ));
        }
        row.push(p);
    }
    Ok(MarginalEstimate::new(names, probs, last))
}

fn eval(a: EvalArgs) -> CliResult {
    if let Some(spec_path) = &a.spec {
        let out_dir = a.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
        let mut spec = ExperimentSpec::parse(&read(spec_path)?).code_at("E_SPEC", spec_path)?;
        if let bvmc_core::harness::ModelSource::File(p) = &spec.model {
            // relative model paths are resolved against the experiment file's directory
            if p.is_relative() {
                if let Some(dir) = spec_path.parent() {
                    spec.model = bvmc_core::harness::ModelSource::File(dir.join(p));
                }
            }
            if let bvmc_core::harness::ModelSource::File(p) = &spec.model {
                read(p)?;
            }
        }
        if std::env::var("BVMC_STATE_CAP").is_ok() {
            if let ReferenceMode::Exact { .. } = spec.reference {
                spec.reference = ReferenceMode::Exact { cap: state_cap()? };
            }
        }
        std::fs::create_dir_all(&out_dir).code_at("E_IO", &out_dir)?;
        let result = run_experiment(&spec, a.jobs).code("E_EXPERIMENT")?;
        let kl_path = out_dir.join("kl.csv");
        std::fs::write(&kl_path, write_kl_csv(&result)).code_at("E_IO", &kl_path)?;
        let runs_path = out_dir.join("runs.csv");
        std::fs::write(&runs_path, write_runs_csv(&result)).code_at("E_IO", &runs_path)?;
        println!("config,final_checkpoint,mean_kl,ci_lo,ci_hi");
        for c in &result.curves {
            if let Some(p) = c.samples.last() {
                println!(
                    "{},{},{},{},{}",
                    c.config, p.checkpoint, p.mean, p.ci_lo, p.ci_hi
                );
            }
        }
        return Ok(());
    }
    let (Some(rp), Some(ep)) = (&a.reference, &a.estimate) else {
        return Err(fail(
            "E_ARG",
            "need --spec or both --reference and --estimate",
        ));
    };
    let (rtext, etext) = (read(rp)?, read(ep)?);
    let reference = MarginalEstimate::parse(&rtext).code_at("E_MARGINAL", rp)?;
    let estimate = if etext.contains("step,elapsed_ms,var,value,prob") {
        parse_run_csv(&etext).code_at("E_MARGINAL", ep)?
    } else {
        MarginalEstimate::parse(&etext).code_at("E_MARGINAL", ep)?
    };
    let reference = reference.restrict_to(estimate.names()).code("E_MARGINAL")?;
    let kl = kl_divergence(&reference, &estimate).code("E_MARGINAL")?;
    println!("{kl}");
    Ok(())
}

fn orbit(a: OrbitArgs) -> CliResult {
    check_output(a.output.as_ref())?;
    let model = load_model(&a.model)?.normalize_to_clauses();
    let partition = match &a.partition {
        Some(p) => parse_partition(&read(p)?, &model).code_at("E_PARTITION", p)?,
        None => BlockPartition::singleton(model.num_vars()),
    };
    let values = a
        .state
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| fail("E_ARG", format!("--state: bad value `{t}`")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let state = State::new(values);
    model.check_state(&state).code("E_ARG")?;
    let cap = match a.cap {
        Some(0) => return Err(fail("E_ARG", "--cap must be positive")),
        Some(c) => c,
        None => orbit_cap()?,
    };
    let group = SymmetryGroup::detect(
        &model,
        &partition,
        a.node_budget.unwrap_or(DEFAULT_NODE_BUDGET),
    )
    .code("E_SYMMETRY")?;
    let orbit = orbit_enumerate(&group, &state, cap);
    let mut out = format!(
        "# orbit size {} ({})\n",
        orbit.states.len(),
        if orbit.complete {
            "complete"
        } else {
            "truncated at cap"
        }
    );
    for s in &orbit.states {
        out.push_str(&s.to_string());
        out.push('\n');
    }
    if !orbit.complete {
        eprintln!("bvmc: warning: orbit enumeration stopped at cap {cap}");
    }
    emit(a.output.as_ref(), &out)
}
