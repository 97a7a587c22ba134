//! Partition files (`block <name> <name> ...` per line) and candidate sets
//! (partitions separated by `---`).

use super::{Block, BlockPartition, PartitionError};
use crate::model::GraphicalModel;
use crate::scalar::Scalar;

fn parse_lines<'a, T: Scalar>(
    lines: impl Iterator<Item = (usize, &'a str)>,
    model: &GraphicalModel<T>,
) -> Result<BlockPartition, PartitionError> {
    let mut blocks = Vec::new();
    for (line, raw) in lines {
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let err = |message: String| PartitionError::Parse { line, message };
        let mut tokens = text.split_whitespace();
        if tokens.next() != Some("block") {
            return Err(err("expected `block <name> ...`".into()));
        }
        let vars = tokens
            .map(|name| {
                model
                    .var_id(name)
                    .ok_or_else(|| err(format!("unknown variable `{name}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        blocks.push(Block::new(vars).map_err(|e| err(e.to_string()))?);
    }
    BlockPartition::new(model.num_vars(), blocks)
}

pub fn parse_partition<T: Scalar>(
    text: &str,
    model: &GraphicalModel<T>,
) -> Result<BlockPartition, PartitionError> {
    parse_lines(text.lines().enumerate().map(|(i, l)| (i + 1, l)), model)
}

/// Parses one or more partitions separated by `---` lines.
pub fn parse_candidate_set<T: Scalar>(
    text: &str,
    model: &GraphicalModel<T>,
) -> Result<Vec<BlockPartition>, PartitionError> {
    let mut out = Vec::new();
    let mut chunk: Vec<(usize, &str)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim() == "---" {
            out.push(parse_lines(chunk.drain(..), model)?);
        } else {
            chunk.push((i + 1, line));
        }
    }
    if chunk
        .iter()
        .any(|(_, l)| !l.split('#').next().unwrap_or("").trim().is_empty())
    {
        out.push(parse_lines(chunk.into_iter(), model)?);
    }
    Ok(out)
}

impl BlockPartition {
    pub fn to_text<T: Scalar>(&self, model: &GraphicalModel<T>) -> String {
        let mut out = String::new();
        for block in self.blocks() {
            out.push_str("block");
            for &v in block.vars() {
                out.push(' ');
                out.push_str(model.var_name(v));
            }
            out.push('\n');
        }
        out
    }
}

pub fn write_candidate_set<T: Scalar>(
    partitions: &[BlockPartition],
    model: &GraphicalModel<T>,
) -> String {
    partitions
        .iter()
        .map(|p| p.to_text(model))
        .collect::<Vec<_>>()
        .join("---\n")
}
