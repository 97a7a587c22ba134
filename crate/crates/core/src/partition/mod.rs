//! Block partitions of the variables and the block-value pairs they induce.

mod block_model;
mod format;
mod heuristic;

use std::fmt::Write as _;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{GraphicalModel, State, WeightKey};
use crate::scalar::Scalar;

pub use block_model::{build_block_model, BlockFeature, BlockModel, DEFAULT_FEATURE_CAP};
pub use format::{parse_candidate_set, parse_partition, write_candidate_set};
pub use heuristic::{
    generate_block_partitions, get_useful_blocks, get_weight_sign, HeuristicConfig,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PartitionError {
    #[error("empty block")]
    EmptyBlock,
    #[error("variable {0} repeated inside a block")]
    RepeatedInBlock(usize),
    #[error("variable {0} out of range")]
    VariableIndex(usize),
    #[error("variable {var} appears in more than one block")]
    Overlap { var: usize },
    #[error("variable {var} is not covered by any block")]
    Missing { var: usize },
    #[error("block value assignment has {got} entries, block has {expected}")]
    ValueLength { expected: usize, got: usize },
    #[error("transformed feature {feature} spans {states} joint block assignments, cap is {cap}")]
    FeatureTooLarge {
        feature: usize,
        states: u128,
        cap: u64,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// A non-empty, strictly sorted set of variable ids.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Block(Vec<usize>);

impl Block {
    pub fn new(mut vars: Vec<usize>) -> Result<Self, PartitionError> {
        if vars.is_empty() {
            return Err(PartitionError::EmptyBlock);
        }
        vars.sort_unstable();
        if let Some(w) = vars.windows(2).find(|w| w[0] == w[1]) {
            return Err(PartitionError::RepeatedInBlock(w[0]));
        }
        Ok(Block(vars))
    }

    pub fn singleton(var: usize) -> Self {
        Block(vec![var])
    }

    pub fn vars(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, var: usize) -> bool {
        self.0.binary_search(&var).is_ok()
    }

    /// Number of joint assignments of the block's variables.
    pub fn value_count(&self, domain_sizes: &[usize]) -> usize {
        self.0.iter().map(|&v| domain_sizes[v]).product()
    }

    /// All assignments in lexicographic order (first variable most significant).
    pub fn assignments(&self, domain_sizes: &[usize]) -> Vec<Vec<usize>> {
        let count = self.value_count(domain_sizes);
        (0..count)
            .map(|code| decode(code, self.0.iter().map(|&v| domain_sizes[v])))
            .collect()
    }
}

fn decode(
    mut code: usize,
    radices: impl DoubleEndedIterator<Item = usize> + ExactSizeIterator,
) -> Vec<usize> {
    let mut values = vec![0; radices.len()];
    for (slot, radix) in values.iter_mut().rev().zip(radices.rev()) {
        *slot = code % radix;
        code /= radix;
    }
    values
}

/// A block together with one full assignment of its variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BvPair {
    pub block: Block,
    pub values: Vec<usize>,
}

impl BvPair {
    pub fn new(block: Block, values: Vec<usize>) -> Result<Self, PartitionError> {
        if block.len() != values.len() {
            return Err(PartitionError::ValueLength {
                expected: block.len(),
                got: values.len(),
            });
        }
        Ok(BvPair { block, values })
    }

    /// True iff the state agrees with the pair on every block variable.
    pub fn consistent(&self, state: &State) -> bool {
        self.block
            .vars()
            .iter()
            .zip(&self.values)
            .all(|(&var, &value)| state[var] == value)
    }

    pub fn value_of(&self, var: usize) -> Option<usize> {
        self.block
            .vars()
            .iter()
            .position(|&v| v == var)
            .map(|i| self.values[i])
    }
}

/// Checks that `blocks` cover `0..num_vars` exactly once. Reports the first
/// overlap in block order, otherwise the smallest missing variable.
pub fn validate_partition(num_vars: usize, blocks: &[Block]) -> Result<(), PartitionError> {
    let mut seen = vec![false; num_vars];
    for block in blocks {
        for &v in block.vars() {
            if v >= num_vars {
                return Err(PartitionError::VariableIndex(v));
            }
            if std::mem::replace(&mut seen[v], true) {
                return Err(PartitionError::Overlap { var: v });
            }
        }
    }
    match seen.iter().position(|&s| !s) {
        Some(var) => Err(PartitionError::Missing { var }),
        None => Ok(()),
    }
}

/// Disjoint blocks exactly covering the variables, ordered by smallest member.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BlockPartition {
    blocks: Vec<Block>,
    num_vars: usize,
}

impl BlockPartition {
    pub fn new(num_vars: usize, mut blocks: Vec<Block>) -> Result<Self, PartitionError> {
        validate_partition(num_vars, &blocks)?;
        blocks.sort_unstable_by_key(|b| b.vars()[0]);
        Ok(BlockPartition { blocks, num_vars })
    }

    /// One block per variable; under it block-value symmetries are exactly
    /// variable-value symmetries.
    pub fn singleton(num_vars: usize) -> Self {
        BlockPartition {
            blocks: (0..num_vars).map(Block::singleton).collect(),
            num_vars,
        }
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn max_block_size(&self) -> usize {
        self.blocks.iter().map(Block::len).max().unwrap_or(0)
    }

    pub fn is_singleton(&self) -> bool {
        self.blocks.iter().all(|b| b.len() == 1)
    }

    /// Stable 16-hex-digit digest of the partition structure.
    pub fn hash(&self) -> String {
        let mut canonical = String::new();
        for block in &self.blocks {
            canonical.push_str("block");
            for v in block.vars() {
                let _ = write!(canonical, " {v}");
            }
            canonical.push('\n');
        }
        let digest = Sha256::digest(canonical.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Every block of a partition with all of its assignments, densely indexed.
/// Block `l` owns indices `offset(l) .. offset(l) + value_count(l)`; within a
/// block, assignments are in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockValueSet {
    partition: BlockPartition,
    domain_sizes: Vec<usize>,
    offsets: Vec<usize>,
    value_counts: Vec<usize>,
    block_of_index: Vec<usize>,
    block_of_var: Vec<usize>,
}

impl BlockValueSet {
    pub fn new<T: Scalar>(model: &GraphicalModel<T>, partition: &BlockPartition) -> Self {
        Self::from_domains(model.domain_sizes(), partition)
    }

    pub fn from_domains(domain_sizes: Vec<usize>, partition: &BlockPartition) -> Self {
        assert_eq!(
            domain_sizes.len(),
            partition.num_vars(),
            "partition/model mismatch"
        );
        let mut offsets = Vec::with_capacity(partition.len());
        let mut value_counts = Vec::with_capacity(partition.len());
        let mut block_of_index = Vec::new();
        let mut block_of_var = vec![0; domain_sizes.len()];
        for (l, block) in partition.blocks().iter().enumerate() {
            offsets.push(block_of_index.len());
            let count = block.value_count(&domain_sizes);
            value_counts.push(count);
            block_of_index.extend(std::iter::repeat_n(l, count));
            for &v in block.vars() {
                block_of_var[v] = l;
            }
        }
        BlockValueSet {
            partition: partition.clone(),
            domain_sizes,
            offsets,
            value_counts,
            block_of_index,
            block_of_var,
        }
    }

    pub fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    pub fn domain_sizes(&self) -> &[usize] {
        &self.domain_sizes
    }

    /// Total number of block-value pairs.
    pub fn len(&self) -> usize {
        self.block_of_index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.block_of_index.is_empty()
    }

    pub fn num_blocks(&self) -> usize {
        self.offsets.len()
    }

    pub fn block(&self, l: usize) -> &Block {
        &self.partition.blocks()[l]
    }

    pub fn offset(&self, l: usize) -> usize {
        self.offsets[l]
    }

    pub fn value_count(&self, l: usize) -> usize {
        self.value_counts[l]
    }

    pub fn block_of_index(&self, index: usize) -> usize {
        self.block_of_index[index]
    }

    pub fn block_of_var(&self, var: usize) -> usize {
        self.block_of_var[var]
    }

    /// Local code of the block's assignment in `state`.
    #[inline]
    pub fn local_code(&self, l: usize, state: &State) -> usize {
        self.block(l)
            .vars()
            .iter()
            .fold(0, |code, &v| code * self.domain_sizes[v] + state[v])
    }

    /// Global index of the pair of block `l` consistent with `state`.
    #[inline]
    pub fn index_in(&self, l: usize, state: &State) -> usize {
        self.offsets[l] + self.local_code(l, state)
    }

    pub fn index_of(&self, l: usize, values: &[usize]) -> usize {
        let code = self
            .block(l)
            .vars()
            .iter()
            .zip(values)
            .fold(0, |code, (&v, &x)| code * self.domain_sizes[v] + x);
        self.offsets[l] + code
    }

    pub fn values(&self, index: usize) -> Vec<usize> {
        let l = self.block_of_index[index];
        decode(
            index - self.offsets[l],
            self.block(l).vars().iter().map(|&v| self.domain_sizes[v]),
        )
    }

    pub fn pair(&self, index: usize) -> BvPair {
        let l = self.block_of_index[index];
        BvPair {
            block: self.block(l).clone(),
            values: self.values(index),
        }
    }

    /// Writes the assignment of pair `index` into `state`.
    #[inline]
    pub fn write_values(&self, index: usize, state: &mut State) {
        let l = self.block_of_index[index];
        let mut code = index - self.offsets[l];
        for &v in self.block(l).vars().iter().rev() {
            let radix = self.domain_sizes[v];
            state.set(v, code % radix);
            code /= radix;
        }
    }
}

/// Canonical multiset of weights, sorted by their decimal keys.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct WeightSignature(Vec<WeightKey>);

impl WeightSignature {
    pub fn from_weights<T: Scalar>(weights: impl IntoIterator<Item = T>) -> Self {
        let mut keys: Vec<WeightKey> = weights.into_iter().map(WeightKey::of).collect();
        keys.sort();
        WeightSignature(keys)
    }

    pub fn keys(&self) -> &[WeightKey] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}
