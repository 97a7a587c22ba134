//! Line-oriented experiment specs.
//!
//! ```text
//! model = job-search          # or student-curriculum, or file:<path>
//! n = 10
//! edge_prob = 0.1
//! repeats = 20
//! seed = 1
//! model_seed = 3              # optional: one model for all repeats
//! steps = 20000
//! checkpoints = 2000, 4000, 20000
//! reference = exact           # or long_gibbs:<steps>
//!
//! [config vanilla]
//! chain = vanilla
//!
//! [config bv]
//! chain = aggregate
//! alpha = 1.0
//! ```

use std::path::PathBuf;
use std::str::FromStr;

use super::{HarnessError, ReferenceMode};
use crate::group::OrbitMode;
use crate::model::generators::{JobSearchParams, StudentCurriculumParams};
use crate::model::DEFAULT_STATE_CAP;
use crate::symmetry::DEFAULT_NODE_BUDGET;

#[derive(Clone, Debug, PartialEq)]
pub enum ModelSource {
    /// Generator parameters; the seed is replaced per repeat.
    JobSearch(JobSearchParams),
    StudentCurriculum(StudentCurriculumParams),
    File(PathBuf),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartitionChoice {
    Singleton,
    /// The heuristic candidate whose symmetry group moves the most BV pairs.
    Heuristic,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ChainChoice {
    Vanilla,
    Vv,
    Bv {
        alpha: f64,
        partition: PartitionChoice,
    },
    /// Over all heuristic candidate partitions.
    Aggregate {
        alpha: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigSpec {
    pub name: String,
    pub chain: ChainChoice,
    pub orbit_mode: Option<OrbitMode>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub model: ModelSource,
    pub evidence_fraction: f64,
    pub configs: Vec<ConfigSpec>,
    /// One seed per repeat.
    pub seeds: Vec<u64>,
    /// Pins the generated model and evidence for every repeat; only the
    /// chains then vary with the repeat seed.
    pub model_seed: Option<u64>,
    pub steps: u64,
    pub burn_in: u64,
    /// Ascending post-burn-in sample counts.
    pub checkpoints: Vec<u64>,
    /// Wall-clock grid in ms; derived from the runs when empty.
    pub time_points: Vec<f64>,
    pub reference: ReferenceMode,
    pub max_block: usize,
    pub num_partitions: usize,
    pub orbit_mode: OrbitMode,
    pub node_budget: u64,
}

/// Line number, key and raw value of one `key = value` line.
type Entry = (usize, String, String);

impl ExperimentSpec {
    pub fn repeats(&self) -> usize {
        self.seeds.len()
    }

    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut global: Vec<Entry> = Vec::new();
        let mut sections: Vec<(usize, String, Vec<Entry>)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let t = raw.split('#').next().unwrap_or("").trim();
            if t.is_empty() {
                continue;
            }
            if let Some(head) = t.strip_prefix('[') {
                let head = head
                    .strip_suffix(']')
                    .ok_or_else(|| spec_err(line, "unclosed section header"))?;
                let name = head
                    .strip_prefix("config")
                    .map(str::trim)
                    .filter(|n| !n.is_empty() && !n.contains(char::is_whitespace))
                    .ok_or_else(|| spec_err(line, "expected `[config <name>]`"))?;
                if sections.iter().any(|(_, n, _)| n == name) {
                    return Err(spec_err(line, &format!("duplicate config `{name}`")));
                }
                sections.push((line, name.to_owned(), Vec::new()));
                continue;
            }
            let (k, v) = t
                .split_once('=')
                .ok_or_else(|| spec_err(line, "expected `key = value`"))?;
            let entry = (line, k.trim().to_owned(), v.trim().to_owned());
            match sections.last_mut() {
                Some((_, _, entries)) => entries.push(entry),
                None => global.push(entry),
            }
        }

        let mut b = Builder::default();
        for (line, k, v) in &global {
            b.global(*line, k, v)?;
        }
        if sections.is_empty() {
            return Err(spec_err(1, "no `[config <name>]` sections"));
        }
        let configs = sections
            .into_iter()
            .map(|(line, name, entries)| parse_config(line, name, &entries))
            .collect::<Result<Vec<_>, _>>()?;
        b.finish(configs)
    }
}

fn spec_err(line: usize, message: &str) -> HarnessError {
    HarnessError::Spec {
        line,
        message: message.to_owned(),
    }
}

fn num<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T, HarnessError> {
    v.parse()
        .map_err(|_| spec_err(line, &format!("bad value `{v}` for `{key}`")))
}

fn list<T: FromStr>(line: usize, key: &str, v: &str) -> Result<Vec<T>, HarnessError> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| num(line, key, s))
        .collect()
}

#[derive(Default)]
struct Builder {
    model: Option<(usize, String)>,
    n: Option<usize>,
    edge_prob: Option<f64>,
    friend_prob: Option<f64>,
    w: Option<f64>,
    w3: Option<f64>,
    weight_low: Option<f64>,
    weight_high: Option<f64>,
    weight_pool: Option<Vec<f64>>,
    evidence_fraction: f64,
    repeats: Option<usize>,
    seed: u64,
    seeds: Option<Vec<u64>>,
    model_seed: Option<u64>,
    steps: Option<u64>,
    burn_in: u64,
    checkpoints: Option<(usize, Vec<u64>)>,
    time_points: Vec<f64>,
    reference: Option<ReferenceMode>,
    state_cap: Option<u64>,
    max_block: Option<usize>,
    num_partitions: Option<usize>,
    orbit_mode: Option<OrbitMode>,
    node_budget: Option<u64>,
}

impl Builder {
    fn global(&mut self, line: usize, k: &str, v: &str) -> Result<(), HarnessError> {
        match k {
            "model" => self.model = Some((line, v.to_owned())),
            "n" => self.n = Some(num(line, k, v)?),
            "edge_prob" => self.edge_prob = Some(num(line, k, v)?),
            "friend_prob" => self.friend_prob = Some(num(line, k, v)?),
            "w" => self.w = Some(num(line, k, v)?),
            "w3" => self.w3 = Some(num(line, k, v)?),
            "weight_low" => self.weight_low = Some(num(line, k, v)?),
            "weight_high" => self.weight_high = Some(num(line, k, v)?),
            "weight_pool" => self.weight_pool = Some(list(line, k, v)?),
            "evidence_fraction" => {
                let f: f64 = num(line, k, v)?;
                if !(0.0..=1.0).contains(&f) {
                    return Err(spec_err(line, "evidence_fraction must be in [0, 1]"));
                }
                self.evidence_fraction = f;
            }
            "repeats" => self.repeats = Some(num(line, k, v)?),
            "seed" => self.seed = num(line, k, v)?,
            "seeds" => self.seeds = Some(list(line, k, v)?),
            "model_seed" => self.model_seed = Some(num(line, k, v)?),
            "steps" => self.steps = Some(num(line, k, v)?),
            "burn_in" => self.burn_in = num(line, k, v)?,
            "checkpoints" => self.checkpoints = Some((line, list(line, k, v)?)),
            "time_points" => self.time_points = list(line, k, v)?,
            "reference" => {
                self.reference = Some(if v == "exact" {
                    ReferenceMode::Exact {
                        cap: DEFAULT_STATE_CAP,
                    }
                } else if let Some(steps) = v.strip_prefix("long_gibbs:") {
                    ReferenceMode::LongGibbs {
                        steps: num(line, k, steps.trim())?,
                        seed: 0,
                    }
                } else {
                    return Err(spec_err(
                        line,
                        "reference must be `exact` or `long_gibbs:<steps>`",
                    ));
                })
            }
            "state_cap" => self.state_cap = Some(num(line, k, v)?),
            "max_block" => self.max_block = Some(num(line, k, v)?),
            "num_partitions" => self.num_partitions = Some(num(line, k, v)?),
            "orbit_mode" => {
                self.orbit_mode = Some(v.parse().map_err(|e: String| spec_err(line, &e))?)
            }
            "node_budget" => self.node_budget = Some(num(line, k, v)?),
            _ => return Err(spec_err(line, &format!("unknown key `{k}`"))),
        }
        Ok(())
    }

    fn finish(self, configs: Vec<ConfigSpec>) -> Result<ExperimentSpec, HarnessError> {
        let (mline, mname) = self.model.ok_or_else(|| spec_err(1, "missing `model`"))?;
        let model = match mname.as_str() {
            "job-search" => {
                let d = JobSearchParams::default();
                ModelSource::JobSearch(JobSearchParams {
                    n_people: self.n.unwrap_or(d.n_people),
                    edge_prob: self.edge_prob.unwrap_or(d.edge_prob),
                    weight_low: self.weight_low.unwrap_or(d.weight_low),
                    weight_high: self.weight_high.unwrap_or(d.weight_high),
                    w3: self.w3.unwrap_or(d.w3),
                    seed: 0,
                })
            }
            "student-curriculum" => {
                let d = StudentCurriculumParams::default();
                let pool = self.weight_pool.unwrap_or(d.weight_pool);
                if pool.len() < 4 {
                    return Err(spec_err(mline, "weight_pool needs at least 4 weights"));
                }
                ModelSource::StudentCurriculum(StudentCurriculumParams {
                    n_students: self.n.unwrap_or(d.n_students),
                    friend_prob: self.friend_prob.unwrap_or(d.friend_prob),
                    weight_pool: pool,
                    w: self.w.unwrap_or(d.w),
                    seed: 0,
                })
            }
            other => match other.strip_prefix("file:") {
                Some(path) if !path.trim().is_empty() => {
                    ModelSource::File(PathBuf::from(path.trim()))
                }
                _ => {
                    return Err(spec_err(
                        mline,
                        "model must be job-search, student-curriculum or file:<path>",
                    ))
                }
            },
        };

        let seeds = match (self.seeds, self.repeats) {
            (Some(s), Some(r)) if s.len() != r => {
                return Err(spec_err(1, "`seeds` length differs from `repeats`"))
            }
            (Some(s), _) => s,
            (None, r) => (0..r.unwrap_or(1) as u64).map(|i| self.seed + i).collect(),
        };
        if seeds.is_empty() {
            return Err(spec_err(1, "need at least one repeat"));
        }
        let steps = self.steps.ok_or_else(|| spec_err(1, "missing `steps`"))?;
        if steps == 0 {
            return Err(spec_err(1, "`steps` must be positive"));
        }
        let checkpoints = match self.checkpoints {
            Some((line, c)) => {
                if c.is_empty()
                    || c[0] == 0
                    || c.windows(2).any(|w| w[0] >= w[1])
                    || *c.last().unwrap() > steps
                {
                    return Err(spec_err(
                        line,
                        "checkpoints must be strictly ascending, positive and at most `steps`",
                    ));
                }
                c
            }
            None => {
                let mut c: Vec<u64> = (1..=10).map(|i| (steps * i / 10).max(1)).collect();
                c.dedup();
                c
            }
        };
        if self.time_points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(spec_err(1, "time_points must be strictly ascending"));
        }
        let reference = match (
            self.reference.unwrap_or(ReferenceMode::Exact {
                cap: DEFAULT_STATE_CAP,
            }),
            self.state_cap,
        ) {
            (ReferenceMode::Exact { .. }, Some(cap)) => ReferenceMode::Exact { cap },
            (r, _) => r,
        };
        let max_block = self.max_block.unwrap_or(2);
        let num_partitions = self.num_partitions.unwrap_or(5);
        if max_block == 0 || num_partitions == 0 {
            return Err(spec_err(1, "max_block and num_partitions must be positive"));
        }
        Ok(ExperimentSpec {
            model,
            evidence_fraction: self.evidence_fraction,
            configs,
            seeds,
            model_seed: self.model_seed,
            steps,
            burn_in: self.burn_in,
            checkpoints,
            time_points: self.time_points,
            reference,
            max_block,
            num_partitions,
            orbit_mode: self.orbit_mode.unwrap_or_default(),
            node_budget: self.node_budget.unwrap_or(DEFAULT_NODE_BUDGET),
        })
    }
}

fn parse_config(
    header: usize,
    name: String,
    entries: &[(usize, String, String)],
) -> Result<ConfigSpec, HarnessError> {
    let mut chain = None;
    let mut alpha = None;
    let mut partition = PartitionChoice::Heuristic;
    let mut orbit_mode = None;
    for (line, k, v) in entries {
        let line = *line;
        match k.as_str() {
            "chain" => chain = Some((line, v.clone())),
            "alpha" => {
                let a: f64 = num(line, k, v)?;
                if !(0.0..=1.0).contains(&a) {
                    return Err(spec_err(line, "alpha must be in [0, 1]"));
                }
                alpha = Some(a);
            }
            "partition" => {
                partition = match v.as_str() {
                    "singleton" => PartitionChoice::Singleton,
                    "heuristic" => PartitionChoice::Heuristic,
                    _ => return Err(spec_err(line, "partition must be singleton or heuristic")),
                }
            }
            "orbit_mode" => orbit_mode = Some(v.parse().map_err(|e: String| spec_err(line, &e))?),
            _ => return Err(spec_err(line, &format!("unknown config key `{k}`"))),
        }
    }
    let (line, kind) = chain.ok_or_else(|| spec_err(header, "config needs `chain`"))?;
    let alpha = alpha.unwrap_or(1.0);
    let chain = match kind.as_str() {
        "vanilla" => ChainChoice::Vanilla,
        "vv" => ChainChoice::Vv,
        "bv" => ChainChoice::Bv { alpha, partition },
        "aggregate" => ChainChoice::Aggregate { alpha },
        _ => return Err(spec_err(line, "chain must be vanilla, vv, bv or aggregate")),
    };
    Ok(ConfigSpec {
        name,
        chain,
        orbit_mode,
    })
}
