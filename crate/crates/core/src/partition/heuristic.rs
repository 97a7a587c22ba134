//! Candidate block partitions.
//!
//! Useful blocks are the small variable subsets of each feature's scope. Every
//! assignment of every useful block is bucketed by (block size, weight
//! signature); partitions are sampled by drawing a bucket proportionally to
//! its size, then a block uniformly inside it, keeping it iff it is disjoint
//! from the blocks chosen so far.

use std::collections::{BTreeMap, BTreeSet};

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Block, BlockPartition, BvPair, WeightSignature};
use crate::model::GraphicalModel;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeuristicConfig {
    /// Maximum block size `r`.
    pub max_block: usize,
    pub num_partitions: usize,
    pub seed: u64,
    /// Consecutive conflicting draws before the remaining variables are
    /// covered by singletons. Defaults to `50 · n`.
    pub max_rejections: Option<usize>,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        HeuristicConfig {
            max_block: 2,
            num_partitions: 5,
            seed: 0,
            max_rejections: None,
        }
    }
}

/// All non-empty subsets of size ≤ `r` of each feature's variable set.
pub fn get_useful_blocks<T: Scalar>(model: &GraphicalModel<T>, r: usize) -> BTreeSet<Block> {
    assert!(r >= 1, "maximum block size must be at least 1");
    let mut out = BTreeSet::new();
    let mut current = Vec::new();
    for f in model.features() {
        let vars = f.vars();
        subsets(&vars, 0, r, &mut current, &mut out);
    }
    out
}

fn subsets(
    vars: &[usize],
    start: usize,
    r: usize,
    current: &mut Vec<usize>,
    out: &mut BTreeSet<Block>,
) {
    for i in start..vars.len() {
        current.push(vars[i]);
        out.insert(Block::new(current.clone()).expect("distinct sorted vars"));
        if current.len() < r {
            subsets(vars, i + 1, r, current, out);
        }
        current.pop();
    }
}

/// Multiset of weights of the features in the block's blanket that the
/// pair's partial assignment alone makes true.
pub fn get_weight_sign<T: Scalar>(model: &GraphicalModel<T>, bv: &BvPair) -> WeightSignature {
    weight_sign_with(model, &model.feature_blankets(), bv)
}

fn weight_sign_with<T: Scalar>(
    model: &GraphicalModel<T>,
    blankets: &[Vec<usize>],
    bv: &BvPair,
) -> WeightSignature {
    let blanket: BTreeSet<usize> = bv
        .block
        .vars()
        .iter()
        .flat_map(|&v| blankets[v].iter().copied())
        .collect();
    WeightSignature::from_weights(
        blanket
            .into_iter()
            .map(|j| &model.features()[j])
            .filter(|f| f.is_satisfied_by_partial(|v| bv.value_of(v)))
            .map(|f| f.weight),
    )
}

pub fn generate_block_partitions<T: Scalar>(
    model: &GraphicalModel<T>,
    config: &HeuristicConfig,
) -> Vec<BlockPartition> {
    assert!(config.num_partitions >= 1, "need at least one partition");
    let n = model.num_vars();
    let useful: Vec<Block> = get_useful_blocks(model, config.max_block)
        .into_iter()
        .collect();
    let blankets = model.feature_blankets();
    let domains = model.domain_sizes();

    // one entry per block-value pair, so a block recurs once per assignment
    let mut keyed: BTreeMap<(usize, WeightSignature), Vec<usize>> = BTreeMap::new();
    for (bi, block) in useful.iter().enumerate() {
        for values in block.assignments(&domains) {
            let bv = BvPair {
                block: block.clone(),
                values,
            };
            let sig = weight_sign_with(model, &blankets, &bv);
            keyed.entry((block.len(), sig)).or_default().push(bi);
        }
    }
    let buckets: Vec<Vec<usize>> = keyed.into_values().collect();
    let bucket_dist = WeightedIndex::new(buckets.iter().map(Vec::len)).ok();

    let max_rejections = config.max_rejections.unwrap_or(50 * n);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    (0..config.num_partitions)
        .map(|_| {
            let mut covered = vec![false; n];
            let mut remaining = n;
            let mut chosen = Vec::new();
            let mut rejections = 0;
            while remaining > 0 {
                let Some(dist) = bucket_dist.as_ref().filter(|_| rejections < max_rejections)
                else {
                    for (v, c) in covered.iter().enumerate() {
                        if !c {
                            chosen.push(Block::singleton(v));
                        }
                    }
                    break;
                };
                let bucket = &buckets[dist.sample(&mut rng)];
                let block = &useful[bucket[rng.gen_range(0..bucket.len())]];
                if block.vars().iter().all(|&v| !covered[v]) {
                    for &v in block.vars() {
                        covered[v] = true;
                    }
                    remaining -= block.len();
                    chosen.push(block.clone());
                    rejections = 0;
                } else {
                    rejections += 1;
                }
            }
            BlockPartition::new(n, chosen).expect("constructed as a disjoint cover")
        })
        .collect()
}
