//! Block-value symmetries from automorphisms of a coloured graph.
//!
//! Nodes are laid out as hubs (one per block), then BV nodes (one per block
//! assignment, in [`BlockValueSet`] index order), then one node per clause.
//! Hubs share colour 0, BV nodes colour 1, and clause nodes get colour
//! `2 + rank` of their weight among the distinct weights.

mod graph;
mod search;

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::model::{GraphicalModel, WeightKey};
use crate::partition::{BlockPartition, BlockValueSet};
use crate::scalar::Scalar;

pub use graph::ColoredGraph;
pub use search::{find_automorphism_generators, GraphAutomorphism, DEFAULT_NODE_BUDGET};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SymmetryError {
    #[error("model must be in clause form (normalize AND features first)")]
    NotClausal,
    #[error("partition covers {got} variables, model has {expected}")]
    PartitionMismatch { expected: usize, got: usize },
    #[error("automorphism search exceeded node budget of {budget}")]
    Budget { budget: u64 },
    #[error("invalid BV permutation: {0}")]
    Invalid(String),
    #[error("graph: {0}")]
    Graph(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Hub(usize),
    BvNode(usize),
    FeatureNode(usize),
}

#[derive(Clone, Debug)]
pub struct BvGraph {
    graph: ColoredGraph,
    values: BlockValueSet,
    num_features: usize,
}

impl BvGraph {
    pub fn graph(&self) -> &ColoredGraph {
        &self.graph
    }

    pub fn block_values(&self) -> &BlockValueSet {
        &self.values
    }

    pub fn into_block_values(self) -> BlockValueSet {
        self.values
    }

    pub fn num_hubs(&self) -> usize {
        self.values.num_blocks()
    }

    pub fn num_bv_nodes(&self) -> usize {
        self.values.len()
    }

    pub fn num_feature_nodes(&self) -> usize {
        self.num_features
    }

    pub fn hub_node(&self, block: usize) -> usize {
        block
    }

    pub fn bv_node(&self, index: usize) -> usize {
        self.num_hubs() + index
    }

    pub fn feature_node(&self, feature: usize) -> usize {
        self.num_hubs() + self.num_bv_nodes() + feature
    }

    pub fn kind(&self, node: usize) -> NodeKind {
        let (h, b) = (self.num_hubs(), self.num_bv_nodes());
        if node < h {
            NodeKind::Hub(node)
        } else if node < h + b {
            NodeKind::BvNode(node - h)
        } else {
            NodeKind::FeatureNode(node - h - b)
        }
    }
}

pub fn build_bv_graph<T: Scalar>(
    model: &GraphicalModel<T>,
    partition: &BlockPartition,
) -> Result<BvGraph, SymmetryError> {
    if !model.is_clausal() {
        return Err(SymmetryError::NotClausal);
    }
    if partition.num_vars() != model.num_vars() {
        return Err(SymmetryError::PartitionMismatch {
            expected: model.num_vars(),
            got: partition.num_vars(),
        });
    }
    let values = BlockValueSet::new(model, partition);
    let features = model.features();

    let mut weights: BTreeMap<WeightKey, T> = BTreeMap::new();
    for f in features {
        weights.entry(WeightKey::of(f.weight)).or_insert(f.weight);
    }
    let mut ranked: Vec<(WeightKey, T)> = weights.into_iter().collect();
    ranked.sort_by(|a, b| a.1.as_f64().total_cmp(&b.1.as_f64()));
    let rank: BTreeMap<WeightKey, usize> = ranked
        .into_iter()
        .enumerate()
        .map(|(i, (k, _))| (k, i))
        .collect();

    let hubs = values.num_blocks();
    let bvs = values.len();
    let mut colors = vec![0; hubs];
    colors.extend(std::iter::repeat_n(1, bvs));
    colors.extend(features.iter().map(|f| 2 + rank[&WeightKey::of(f.weight)]));
    let mut g = ColoredGraph::new(colors);

    for index in 0..bvs {
        g.add_edge(values.block_of_index(index), hubs + index)?;
    }
    let decoded: Vec<Vec<usize>> = (0..bvs).map(|i| values.values(i)).collect();
    for (j, f) in features.iter().enumerate() {
        let node = hubs + bvs + j;
        for lit in &f.literals {
            let l = values.block_of_var(lit.var);
            let pos = values
                .block(l)
                .vars()
                .iter()
                .position(|&v| v == lit.var)
                .expect("variable belongs to its block");
            let start = values.offset(l);
            for (index, vals) in decoded
                .iter()
                .enumerate()
                .skip(start)
                .take(values.value_count(l))
            {
                if lit.holds(vals[pos]) {
                    g.add_edge(hubs + index, node)?;
                }
            }
        }
    }
    Ok(BvGraph {
        graph: g,
        values,
        num_features: features.len(),
    })
}

/// A valid permutation of block-value pairs: index `i` maps to `perm[i]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BvSymmetry(Vec<usize>);

impl BvSymmetry {
    pub fn identity(n: usize) -> Self {
        BvSymmetry((0..n).collect())
    }

    /// Checks bijectivity and block validity against `values`.
    pub fn new(perm: Vec<usize>, values: &BlockValueSet) -> Result<Self, SymmetryError> {
        let s = BvSymmetry(perm);
        s.validate(values)?;
        Ok(s)
    }

    pub(crate) fn from_vec_unchecked(perm: Vec<usize>) -> Self {
        BvSymmetry(perm)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn image(&self, index: usize) -> usize {
        self.0[index]
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &p)| i == p)
    }

    pub fn validate(&self, values: &BlockValueSet) -> Result<(), SymmetryError> {
        let n = values.len();
        if self.0.len() != n {
            return Err(SymmetryError::Invalid(format!(
                "length {} over {n} BV pairs",
                self.0.len()
            )));
        }
        let mut hit = vec![false; n];
        for &p in &self.0 {
            if p >= n || std::mem::replace(&mut hit[p], true) {
                return Err(SymmetryError::Invalid("not a bijection".into()));
            }
        }
        for l in 0..values.num_blocks() {
            let start = values.offset(l);
            let target = values.block_of_index(self.0[start]);
            if values.value_count(target) != values.value_count(l) {
                return Err(SymmetryError::Invalid(format!(
                    "block {l} maps onto block {target} of different size"
                )));
            }
            if (start..start + values.value_count(l))
                .any(|i| values.block_of_index(self.0[i]) != target)
            {
                return Err(SymmetryError::Invalid(format!(
                    "block {l} is split across target blocks"
                )));
            }
        }
        Ok(())
    }

    /// Cycle notation with fixed points omitted, e.g. `(0 3)(1 2)`; the
    /// identity is `()`.
    pub fn to_cycles(&self) -> String {
        let mut seen = vec![false; self.0.len()];
        let mut out = String::new();
        for start in 0..self.0.len() {
            if seen[start] || self.0[start] == start {
                continue;
            }
            out.push('(');
            let mut i = start;
            loop {
                seen[i] = true;
                if i != start {
                    out.push(' ');
                }
                let _ = write!(out, "{i}");
                i = self.0[i];
                if i == start {
                    break;
                }
            }
            out.push(')');
        }
        if out.is_empty() {
            out.push_str("()");
        }
        out
    }

    /// Parses cycle notation over `n` points.
    pub fn parse_cycles(text: &str, n: usize) -> Result<Self, String> {
        let mut perm: Vec<usize> = (0..n).collect();
        let mut moved = vec![false; n];
        let mut rest = text.trim();
        while !rest.is_empty() {
            let inner = rest.strip_prefix('(').ok_or("expected `(`")?;
            let close = inner.find(')').ok_or("unclosed cycle")?;
            let cycle = inner[..close]
                .split_whitespace()
                .map(|t| t.parse::<usize>().map_err(|_| format!("bad index `{t}`")))
                .collect::<Result<Vec<_>, _>>()?;
            for (k, &i) in cycle.iter().enumerate() {
                if i >= n {
                    return Err(format!("index {i} out of range for {n} BV pairs"));
                }
                if std::mem::replace(&mut moved[i], true) {
                    return Err(format!("index {i} appears twice"));
                }
                perm[i] = cycle[(k + 1) % cycle.len()];
            }
            rest = inner[close + 1..].trim_start();
        }
        Ok(BvSymmetry(perm))
    }
}

impl fmt::Display for BvSymmetry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_cycles())
    }
}

/// Restricts graph automorphisms to the BV nodes, re-indexed over the block
/// values. Identity restrictions and duplicates are dropped.
pub fn extract_bv_symmetries(
    graph: &BvGraph,
    generators: &[GraphAutomorphism],
) -> Result<Vec<BvSymmetry>, SymmetryError> {
    let hubs = graph.num_hubs();
    let bvs = graph.num_bv_nodes();
    let mut out: Vec<BvSymmetry> = Vec::new();
    for g in generators {
        if g.as_slice().len() != graph.graph().num_nodes() {
            return Err(SymmetryError::Invalid("generator size mismatch".into()));
        }
        for h in 0..hubs {
            if g.image(h) >= hubs {
                return Err(SymmetryError::Invalid(format!(
                    "hub {h} leaves the hub set"
                )));
            }
        }
        let perm = (0..bvs)
            .map(|i| {
                let img = g.image(hubs + i);
                if (hubs..hubs + bvs).contains(&img) {
                    Ok(img - hubs)
                } else {
                    Err(SymmetryError::Invalid(format!(
                        "BV node {i} leaves the BV set"
                    )))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        let sym = BvSymmetry(perm);
        sym.validate(graph.block_values())?;
        for l in 0..hubs {
            let target = graph
                .block_values()
                .block_of_index(sym.image(graph.block_values().offset(l)));
            if g.image(l) != target {
                return Err(SymmetryError::Invalid(format!(
                    "hub {l} and its BV nodes disagree on the target block"
                )));
            }
        }
        if !sym.is_identity() && !out.contains(&sym) {
            out.push(sym);
        }
    }
    Ok(out)
}

/// Builds the graph, searches it, and extracts the BV symmetries.
pub fn detect_bv_symmetries<T: Scalar>(
    model: &GraphicalModel<T>,
    partition: &BlockPartition,
    budget: u64,
) -> Result<(BlockValueSet, Vec<BvSymmetry>), SymmetryError> {
    let graph = build_bv_graph(model, partition)?;
    let gens = find_automorphism_generators(graph.graph(), budget)?;
    let syms = extract_bv_symmetries(&graph, &gens)?;
    Ok((graph.into_block_values(), syms))
}

/// One `bvsym <partition-hash>` section per entry.
pub fn write_symmetry_file(sections: &[(String, Vec<BvSymmetry>)]) -> String {
    let mut out = String::new();
    for (hash, gens) in sections {
        let _ = writeln!(out, "bvsym {hash}");
        for g in gens {
            let _ = writeln!(out, "{}", g.to_cycles());
        }
    }
    out
}

/// Parses sections whose generators act on `num_values(hash)` BV pairs.
pub fn parse_symmetry_file(
    text: &str,
    mut num_values: impl FnMut(&str) -> Option<usize>,
) -> Result<Vec<(String, Vec<BvSymmetry>)>, SymmetryError> {
    let mut out: Vec<(String, usize, Vec<BvSymmetry>)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let err = |message: String| SymmetryError::Parse { line, message };
        if let Some(hash) = text.strip_prefix("bvsym") {
            let hash = hash.trim();
            if hash.is_empty() || hash.contains(char::is_whitespace) {
                return Err(err("expected `bvsym <partition-hash>`".into()));
            }
            let n =
                num_values(hash).ok_or_else(|| err(format!("unknown partition hash {hash}")))?;
            out.push((hash.to_owned(), n, Vec::new()));
        } else {
            let (_, n, gens) = out
                .last_mut()
                .ok_or_else(|| err("generator before any `bvsym` header".into()))?;
            gens.push(BvSymmetry::parse_cycles(text, *n).map_err(err)?);
        }
    }
    Ok(out.into_iter().map(|(h, _, g)| (h, g)).collect())
}
