//! `bvmc`: block-value symmetry detection and orbital MCMC from the shell.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on runtime errors. Runtime
//! errors are printed as a single `bvmc: error[CODE]: message` line.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "bvmc",
    version,
    about = "Block-value symmetries and orbital MCMC for discrete graphical models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a Job Search or Student Curriculum model.
    Gen(GenArgs),
    /// Sample candidate block partitions with the bucket heuristic.
    Partitions(PartitionsArgs),
    /// Detect BV symmetry generators for one or more partitions.
    Symmetries(SymmetriesArgs),
    /// Exact marginals by enumeration.
    Exact(ExactArgs),
    /// Run a Gibbs, VV, BV or aggregate chain and write marginal snapshots.
    Run(RunArgs),
    /// KL of an estimate against a reference, or a full experiment spec.
    Eval(EvalArgs),
    /// Enumerate the orbit of a state under a partition's symmetry group.
    Orbit(OrbitArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Domain {
    JobSearch,
    StudentCurriculum,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, value_enum)]
    domain: Domain,
    /// Number of people (Job Search) or students (Student Curriculum).
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Job Search: probability that a pair of people is linked.
    #[arg(long)]
    edge_prob: Option<f64>,
    /// Student Curriculum: probability that a pair of students are friends.
    #[arg(long)]
    friend_prob: Option<f64>,
    /// Write to this file instead of standard output.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct HeuristicArgs {
    /// Maximum block size.
    #[arg(long, default_value_t = 2)]
    max_block: usize,
    /// Number of candidate partitions.
    #[arg(long, default_value_t = 5)]
    count: usize,
}

#[derive(Args, Debug)]
struct PartitionsArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    heuristic: HeuristicArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PartitionSource {
    /// Partition file (`block <name> ...` per line).
    #[arg(long, conflicts_with_all = ["candidates", "singleton_partition"])]
    partition: Option<PathBuf>,
    /// Candidate-set file (partitions separated by `---`).
    #[arg(long, conflicts_with = "singleton_partition")]
    candidates: Option<PathBuf>,
    /// Use one block per variable.
    #[arg(long)]
    singleton_partition: bool,
}

#[derive(Args, Debug)]
struct SymmetriesArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    source: PartitionSource,
    #[command(flatten)]
    heuristic: HeuristicArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Automorphism search budget (refinement-tree nodes).
    #[arg(long)]
    node_budget: Option<u64>,
    /// Also write the coloured graph of the first partition here.
    #[arg(long)]
    export_graph: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExactArgs {
    #[arg(long)]
    model: PathBuf,
    /// Evidence file (`name=value` per line).
    #[arg(long)]
    evidence: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ChainArg {
    Vanilla,
    Vv,
    Bv,
    Aggregate,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum OrbitModeArg {
    Pra,
    Exact,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    evidence: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "vanilla")]
    chain: ChainArg,
    /// Orbital move probability for `bv` and `aggregate`.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[command(flatten)]
    source: PartitionSource,
    #[command(flatten)]
    heuristic: HeuristicArgs,
    /// Post-burn-in steps.
    #[arg(long, default_value_t = 100_000)]
    steps: u64,
    #[arg(long, default_value_t = 0)]
    burn_in: u64,
    /// Snapshot interval; defaults to a single final snapshot.
    #[arg(long)]
    report_every: Option<u64>,
    #[arg(long, default_value_t = 1)]
    thinning: u64,
    #[arg(long, value_enum, default_value = "pra")]
    orbit_mode: OrbitModeArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Independent chains with seeds `seed, seed+1, ...`, pooled.
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    /// Worker threads for repeats (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long)]
    node_budget: Option<u64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Experiment spec; writes kl.csv and runs.csv into --out-dir.
    #[arg(long, conflicts_with_all = ["reference", "estimate"], required_unless_present = "reference")]
    spec: Option<PathBuf>,
    #[arg(long, requires = "spec")]
    out_dir: Option<PathBuf>,
    /// Reference marginal file.
    #[arg(long, requires = "estimate")]
    reference: Option<PathBuf>,
    /// Marginal file or run CSV (its last snapshot is used).
    #[arg(long, requires = "reference")]
    estimate: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Args, Debug)]
struct OrbitArgs {
    #[arg(long)]
    model: PathBuf,
    /// Partition file; defaults to the singleton partition.
    #[arg(long)]
    partition: Option<PathBuf>,
    /// Values in variable order, separated by spaces or commas.
    #[arg(long)]
    state: String,
    /// Maximum orbit size to enumerate.
    #[arg(long)]
    cap: Option<usize>,
    #[arg(long)]
    node_budget: Option<u64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bvmc: error[{}]: {}", e.code, e.message);
            ExitCode::from(2)
        }
    }
}
