//! Permutation groups over block-value pairs: the action on states, product
//! replacement sampling, and orbit enumeration.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{GraphicalModel, State};
use crate::partition::{BlockPartition, BlockValueSet};
use crate::scalar::Scalar;
use crate::symmetry::{detect_bv_symmetries, BvSymmetry, SymmetryError};

/// Default cap on orbit size for exact enumeration.
pub const DEFAULT_ORBIT_CAP: usize = 1 << 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("permutations act on {left} and {right} BV pairs")]
    SizeMismatch { left: usize, right: usize },
    #[error("group has no non-identity generators")]
    NoGenerators,
    #[error("orbit exceeds cap of {cap} states")]
    OrbitCap { cap: usize },
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
}

impl BvSymmetry {
    /// `a.compose(b)` applies `b` first: `i ↦ a[b[i]]`.
    pub fn compose(&self, other: &BvSymmetry) -> Result<BvSymmetry, GroupError> {
        if self.len() != other.len() {
            return Err(GroupError::SizeMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(BvSymmetry::from_vec_unchecked(
            other.as_slice().iter().map(|&i| self.image(i)).collect(),
        ))
    }

    pub fn inverse(&self) -> BvSymmetry {
        let mut inv = vec![0; self.len()];
        for (i, &p) in self.as_slice().iter().enumerate() {
            inv[p] = i;
        }
        BvSymmetry::from_vec_unchecked(inv)
    }

    /// Image of `state`: each block's consistent pair `(B, b)` maps to
    /// `(B', b')` and `b'` is written at `B'`.
    pub fn apply(&self, values: &BlockValueSet, state: &State) -> State {
        let mut out = state.clone();
        apply_perm(self.as_slice(), values, state, &mut out);
        out
    }
}

fn apply_perm(perm: &[usize], values: &BlockValueSet, state: &State, out: &mut State) {
    for l in 0..values.num_blocks() {
        values.write_values(perm[values.index_in(l, state)], out);
    }
}

/// `out = a ∘ b` (apply `b` first).
fn compose_into(a: &[usize], b: &[usize], out: &mut [usize]) {
    for (o, &i) in out.iter_mut().zip(b) {
        *o = a[i];
    }
}

/// The group generated by a set of valid BV permutations.
#[derive(Clone, Debug)]
pub struct SymmetryGroup {
    values: Arc<BlockValueSet>,
    generators: Vec<BvSymmetry>,
}

impl SymmetryGroup {
    /// Validates the generators and drops identities.
    pub fn new(
        values: Arc<BlockValueSet>,
        generators: Vec<BvSymmetry>,
    ) -> Result<Self, GroupError> {
        for g in &generators {
            g.validate(&values)?;
        }
        let generators = generators
            .into_iter()
            .filter(|g| !g.is_identity())
            .collect();
        Ok(SymmetryGroup { values, generators })
    }

    pub fn trivial(values: Arc<BlockValueSet>) -> Self {
        SymmetryGroup {
            values,
            generators: Vec::new(),
        }
    }

    /// Detects the BV symmetry group of a clausal model under `partition`.
    pub fn detect<T: Scalar>(
        model: &GraphicalModel<T>,
        partition: &BlockPartition,
        budget: u64,
    ) -> Result<Self, GroupError> {
        let (values, generators) = detect_bv_symmetries(model, partition, budget)?;
        Ok(SymmetryGroup {
            values: Arc::new(values),
            generators,
        })
    }

    pub fn block_values(&self) -> &Arc<BlockValueSet> {
        &self.values
    }

    pub fn generators(&self) -> &[BvSymmetry] {
        &self.generators
    }

    pub fn is_trivial(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn apply(&self, g: &BvSymmetry, state: &State) -> State {
        g.apply(&self.values, state)
    }

    /// Number of BV pairs moved by at least one generator.
    pub fn support(&self) -> usize {
        (0..self.values.len())
            .filter(|&i| self.generators.iter().any(|g| g.image(i) != i))
            .count()
    }
}

/// Index of the group with the largest support; the first one on ties.
pub fn largest_support(groups: &[SymmetryGroup]) -> Option<usize> {
    (0..groups.len()).max_by_key(|&k| (groups[k].support(), std::cmp::Reverse(k)))
}

/// Product replacement settings.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PraConfig {
    /// Defaults to `max(10, 2·|gens| + 1)`.
    pub pad_size: Option<usize>,
    pub burn_in: usize,
    pub steps_per_sample: usize,
}

impl Default for PraConfig {
    fn default() -> Self {
        PraConfig {
            pad_size: None,
            burn_in: 60,
            steps_per_sample: 2,
        }
    }
}

/// Product replacement random walk with a rattle accumulator.
#[derive(Clone, Debug)]
pub struct PraSampler {
    values: Arc<BlockValueSet>,
    pad: Vec<Vec<usize>>,
    acc: Vec<usize>,
    scratch: Vec<usize>,
    inv: Vec<usize>,
    rng: ChaCha8Rng,
    steps_per_sample: usize,
}

impl PraSampler {
    pub fn new(group: &SymmetryGroup, config: PraConfig, seed: u64) -> Result<Self, GroupError> {
        let gens = group.generators();
        if gens.is_empty() {
            return Err(GroupError::NoGenerators);
        }
        let size = config.pad_size.unwrap_or(0).max(10).max(2 * gens.len() + 1);
        let n = group.values.len();
        let mut s = PraSampler {
            values: Arc::clone(&group.values),
            pad: (0..size)
                .map(|i| gens[i % gens.len()].as_slice().to_vec())
                .collect(),
            acc: (0..n).collect(),
            scratch: vec![0; n],
            inv: vec![0; n],
            rng: ChaCha8Rng::seed_from_u64(seed),
            steps_per_sample: config.steps_per_sample.max(1),
        };
        for _ in 0..config.burn_in {
            s.step();
        }
        Ok(s)
    }

    fn step(&mut self) {
        let k = self.pad.len();
        let i = self.rng.gen_range(0..k);
        let mut j = self.rng.gen_range(0..k - 1);
        if j >= i {
            j += 1;
        }
        let right: &[usize] = if self.rng.gen::<bool>() {
            &self.pad[j]
        } else {
            for (x, &p) in self.pad[j].iter().enumerate() {
                self.inv[p] = x;
            }
            &self.inv
        };
        // g_i ← g_i · g_j^{±1}
        compose_into(&self.pad[i], right, &mut self.scratch);
        std::mem::swap(&mut self.pad[i], &mut self.scratch);
        // accumulator ← accumulator · g_i
        compose_into(&self.acc, &self.pad[i], &mut self.scratch);
        std::mem::swap(&mut self.acc, &mut self.scratch);
    }

    pub fn sample(&mut self) -> BvSymmetry {
        for _ in 0..self.steps_per_sample {
            self.step();
        }
        BvSymmetry::from_vec_unchecked(self.acc.clone())
    }

    /// Draws an element and applies it to `state` in place.
    pub fn sample_apply(&mut self, state: &mut State) {
        for _ in 0..self.steps_per_sample {
            self.step();
        }
        let src = state.clone();
        apply_perm(&self.acc, &self.values, &src, state);
    }

    pub fn pad(&self) -> impl Iterator<Item = BvSymmetry> + '_ {
        self.pad
            .iter()
            .map(|p| BvSymmetry::from_vec_unchecked(p.clone()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Orbit {
    /// Breadth-first order, starting with the source state.
    pub states: Vec<State>,
    /// False when enumeration stopped at the cap.
    pub complete: bool,
}

/// Breadth-first closure of `state` under the generators, stopping once
/// `cap` states are known.
pub fn orbit_enumerate(group: &SymmetryGroup, state: &State, cap: usize) -> Orbit {
    let cap = cap.max(1);
    let mut seen = HashSet::from([state.clone()]);
    let mut states = vec![state.clone()];
    let mut queue = VecDeque::from([state.clone()]);
    while let Some(s) = queue.pop_front() {
        for g in group.generators() {
            let t = group.apply(g, &s);
            if seen.contains(&t) {
                continue;
            }
            if states.len() == cap {
                return Orbit {
                    states,
                    complete: false,
                };
            }
            seen.insert(t.clone());
            states.push(t.clone());
            queue.push_back(t);
        }
    }
    Orbit {
        states,
        complete: true,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OrbitMode {
    #[default]
    Pra,
    Exact,
}

impl fmt::Display for OrbitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OrbitMode::Pra => "pra",
            OrbitMode::Exact => "exact",
        })
    }
}

impl FromStr for OrbitMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "pra" => Ok(OrbitMode::Pra),
            "exact" => Ok(OrbitMode::Exact),
            _ => Err(format!("unknown orbit mode `{s}` (expected pra or exact)")),
        }
    }
}

const ORBIT_CACHE_LIMIT: usize = 1 << 20;

/// Uniform (exact mode) or approximately uniform (PRA mode) draws from the
/// orbit of a state.
#[derive(Clone, Debug)]
pub enum OrbitSampler {
    Identity,
    Pra(Box<PraSampler>),
    Exact {
        group: SymmetryGroup,
        cap: usize,
        cache: HashMap<State, Arc<Vec<State>>>,
    },
}

impl OrbitSampler {
    /// A trivial group yields [`OrbitSampler::Identity`] in either mode.
    pub fn new(
        group: &SymmetryGroup,
        mode: OrbitMode,
        pra: PraConfig,
        seed: u64,
        cap: usize,
    ) -> Result<Self, GroupError> {
        if group.is_trivial() {
            return Ok(OrbitSampler::Identity);
        }
        Ok(match mode {
            OrbitMode::Pra => OrbitSampler::Pra(Box::new(PraSampler::new(group, pra, seed)?)),
            OrbitMode::Exact => OrbitSampler::Exact {
                group: group.clone(),
                cap,
                cache: HashMap::new(),
            },
        })
    }

    /// Replaces `state` by a draw from its orbit. `rng` is only consumed in
    /// exact mode.
    pub fn sample<R: Rng + ?Sized>(
        &mut self,
        state: &mut State,
        rng: &mut R,
    ) -> Result<(), GroupError> {
        match self {
            OrbitSampler::Identity => {}
            OrbitSampler::Pra(p) => p.sample_apply(state),
            OrbitSampler::Exact { group, cap, cache } => {
                let members = match cache.get(state) {
                    Some(m) => Arc::clone(m),
                    None => {
                        let orbit = orbit_enumerate(group, state, *cap);
                        if !orbit.complete {
                            return Err(GroupError::OrbitCap { cap: *cap });
                        }
                        let mut states = orbit.states;
                        // draws depend only on the orbit, not on where it was entered
                        states.sort_unstable();
                        let members = Arc::new(states);
                        if cache.len() + members.len() > ORBIT_CACHE_LIMIT {
                            cache.clear();
                        }
                        for s in members.iter() {
                            cache.insert(s.clone(), Arc::clone(&members));
                        }
                        members
                    }
                };
                *state = members[rng.gen_range(0..members.len())].clone();
            }
        }
        Ok(())
    }
}
