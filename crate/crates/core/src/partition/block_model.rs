//! The transformed model with one multi-valued variable per block.
//!
//! Each base feature becomes a feature over the blocks its variables touch,
//! stored as the set of joint block assignments that satisfy it. A block
//! thus appears in a transformed feature entirely or not at all.

use std::collections::HashSet;

use super::{BlockPartition, BlockValueSet, PartitionError};
use crate::model::{GraphicalModel, State};
use crate::scalar::Scalar;

/// Default cap on joint block assignments per transformed feature (2^20).
pub const DEFAULT_FEATURE_CAP: u64 = 1 << 20;

#[derive(Clone, Debug, PartialEq)]
pub struct BlockFeature<T> {
    /// Sorted block indices the feature depends on.
    pub blocks: Vec<usize>,
    /// Satisfying local codes, aligned with `blocks`.
    pub satisfying: HashSet<Vec<usize>>,
    pub weight: T,
}

#[derive(Clone, Debug)]
pub struct BlockModel<T> {
    values: BlockValueSet,
    features: Vec<BlockFeature<T>>,
    log_offset: T,
}

pub fn build_block_model<T: Scalar>(
    model: &GraphicalModel<T>,
    partition: &BlockPartition,
    cap: u64,
) -> Result<BlockModel<T>, PartitionError> {
    if partition.num_vars() != model.num_vars() {
        return Err(PartitionError::Missing {
            var: partition.num_vars().min(model.num_vars()),
        });
    }
    let values = BlockValueSet::new(model, partition);
    let mut features = Vec::with_capacity(model.features().len());
    for (j, f) in model.features().iter().enumerate() {
        let mut blocks: Vec<usize> = f.vars().iter().map(|&v| values.block_of_var(v)).collect();
        blocks.sort_unstable();
        blocks.dedup();
        let radices: Vec<usize> = blocks.iter().map(|&l| values.value_count(l)).collect();
        let joint: u128 = radices
            .iter()
            .try_fold(1u128, |a, &r| a.checked_mul(r as u128))
            .unwrap_or(u128::MAX);
        if joint > cap as u128 {
            return Err(PartitionError::FeatureTooLarge {
                feature: j,
                states: joint,
                cap,
            });
        }

        let mut satisfying = HashSet::new();
        let mut scratch = State::zeros(model.num_vars());
        let mut codes = vec![0usize; blocks.len()];
        loop {
            for (&l, &code) in blocks.iter().zip(&codes) {
                values.write_values(values.offset(l) + code, &mut scratch);
            }
            if f.is_satisfied(&scratch) {
                satisfying.insert(codes.clone());
            }
            if !advance(&mut codes, &radices) {
                break;
            }
        }
        features.push(BlockFeature {
            blocks,
            satisfying,
            weight: f.weight,
        });
    }
    Ok(BlockModel {
        values,
        features,
        log_offset: model.log_offset(),
    })
}

fn advance(codes: &mut [usize], radices: &[usize]) -> bool {
    for i in (0..codes.len()).rev() {
        codes[i] += 1;
        if codes[i] < radices[i] {
            return true;
        }
        codes[i] = 0;
    }
    false
}

impl<T: Scalar> BlockModel<T> {
    pub fn block_values(&self) -> &BlockValueSet {
        &self.values
    }

    pub fn features(&self) -> &[BlockFeature<T>] {
        &self.features
    }

    pub fn log_offset(&self) -> T {
        self.log_offset
    }

    /// Domain size of each block variable.
    pub fn domain_sizes(&self) -> Vec<usize> {
        (0..self.values.num_blocks())
            .map(|l| self.values.value_count(l))
            .collect()
    }

    /// Base state to block state: the local code of each block's assignment.
    pub fn map_state(&self, state: &State) -> Vec<usize> {
        (0..self.values.num_blocks())
            .map(|l| self.values.local_code(l, state))
            .collect()
    }

    pub fn inverse_map(&self, block_state: &[usize]) -> State {
        let mut state = State::zeros(self.values.domain_sizes().len());
        for (l, &code) in block_state.iter().enumerate() {
            self.values
                .write_values(self.values.offset(l) + code, &mut state);
        }
        state
    }

    pub fn log_weight(&self, block_state: &[usize]) -> T {
        let mut key = Vec::new();
        self.features.iter().fold(self.log_offset, |acc, f| {
            key.clear();
            key.extend(f.blocks.iter().map(|&l| block_state[l]));
            if f.satisfying.contains(&key) {
                acc + f.weight
            } else {
                acc
            }
        })
    }
}
