//! Automorphism group generators by individualization–refinement.
//!
//! The first path descends from the equitable refinement of the colouring by
//! individualizing the smallest vertex of the first non-singleton cell until
//! the partition is discrete. Walking that path bottom-up, each level tries
//! to map its individualized vertex onto every other vertex of the target
//! cell that is not already in its orbit under the generators found so far;
//! a hit is a leaf of the subtree whose labelling differs from the first
//! leaf by an automorphism. The generators found this way generate the full
//! group.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use super::{ColoredGraph, SymmetryError};

/// Default cap on refinement-tree nodes per search.
pub const DEFAULT_NODE_BUDGET: u64 = 2_000_000;

/// A node permutation: node `v` maps to `perm[v]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GraphAutomorphism(Vec<usize>);

impl GraphAutomorphism {
    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn image(&self, v: usize) -> usize {
        self.0[v]
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }
}

/// Ordered partition of the vertex set; each cell kept sorted.
#[derive(Clone, Debug)]
struct Cells {
    cells: Vec<Vec<usize>>,
    cell_of: Vec<usize>,
}

impl Cells {
    fn from_colors(colors: &[usize]) -> Self {
        let mut order: Vec<usize> = (0..colors.len()).collect();
        order.sort_by_key(|&v| (colors[v], v));
        let mut cells: Vec<Vec<usize>> = Vec::new();
        let mut last = None;
        for v in order {
            if last != Some(colors[v]) {
                cells.push(Vec::new());
                last = Some(colors[v]);
            }
            cells.last_mut().unwrap().push(v);
        }
        Self::with_cells(cells, colors.len())
    }

    fn with_cells(cells: Vec<Vec<usize>>, n: usize) -> Self {
        let mut cell_of = vec![0; n];
        for (i, c) in cells.iter().enumerate() {
            for &v in c {
                cell_of[v] = i;
            }
        }
        Cells { cells, cell_of }
    }

    fn is_discrete(&self) -> bool {
        self.cells.len() == self.cell_of.len()
    }

    fn target(&self) -> Option<usize> {
        self.cells.iter().position(|c| c.len() > 1)
    }

    /// Splits `v` out of cell `c` into a singleton placed just before it.
    fn individualize(&self, c: usize, v: usize) -> Self {
        let mut cells = Vec::with_capacity(self.cells.len() + 1);
        cells.extend_from_slice(&self.cells[..c]);
        cells.push(vec![v]);
        cells.push(self.cells[c].iter().copied().filter(|&u| u != v).collect());
        cells.extend_from_slice(&self.cells[c + 1..]);
        Self::with_cells(cells, self.cell_of.len())
    }

    /// Refines to the coarsest equitable partition below `self` and returns a
    /// hash of the resulting quotient structure, which is invariant under
    /// isomorphism.
    fn refine(&mut self, graph: &ColoredGraph) -> u64 {
        let mut sig: Vec<Vec<usize>> = vec![Vec::new(); self.cell_of.len()];
        loop {
            let mut next = Vec::with_capacity(self.cells.len());
            for cell in &self.cells {
                if cell.len() == 1 {
                    next.push(cell.clone());
                    continue;
                }
                for &v in cell {
                    let s = &mut sig[v];
                    s.clear();
                    s.extend(graph.neighbors(v).iter().map(|&u| self.cell_of[u]));
                    s.sort_unstable();
                }
                let mut members = cell.clone();
                members.sort_by(|&a, &b| sig[a].cmp(&sig[b]).then(a.cmp(&b)));
                let mut start = 0;
                for i in 1..=members.len() {
                    if i == members.len() || sig[members[i]] != sig[members[start]] {
                        next.push(members[start..i].to_vec());
                        start = i;
                    }
                }
            }
            let grew = next.len() != self.cells.len();
            *self = Self::with_cells(next, self.cell_of.len());
            if !grew {
                break;
            }
        }
        let mut h = DefaultHasher::new();
        for cell in &self.cells {
            cell.len().hash(&mut h);
            let mut quotient: Vec<usize> = graph
                .neighbors(cell[0])
                .iter()
                .map(|&u| self.cell_of[u])
                .collect();
            quotient.sort_unstable();
            quotient.hash(&mut h);
            graph.color(cell[0]).hash(&mut h);
        }
        h.finish()
    }

    fn leaf_labelling(&self) -> Vec<usize> {
        self.cells.iter().map(|c| c[0]).collect()
    }
}

struct Level {
    cells: Cells,
    target: usize,
    vertex: usize,
}

struct Search<'a> {
    graph: &'a ColoredGraph,
    invariants: Vec<u64>,
    first_leaf: Vec<usize>,
    budget: u64,
    used: u64,
}

impl Search<'_> {
    fn spend(&mut self) -> Result<(), SymmetryError> {
        self.used += 1;
        if self.used > self.budget {
            return Err(SymmetryError::Budget {
                budget: self.budget,
            });
        }
        Ok(())
    }

    /// Depth-first search for a leaf below `cells` (at `depth`) whose
    /// labelling composes with the first leaf into an automorphism.
    fn find(&mut self, cells: &Cells, depth: usize) -> Result<Option<Vec<usize>>, SymmetryError> {
        if cells.is_discrete() {
            if depth != self.invariants.len() - 1 {
                return Ok(None);
            }
            let leaf = cells.leaf_labelling();
            let mut perm = vec![0; leaf.len()];
            for (&a, &b) in self.first_leaf.iter().zip(&leaf) {
                perm[a] = b;
            }
            return Ok(self.graph.is_automorphism(&perm).then_some(perm));
        }
        let Some(t) = cells.target() else {
            return Ok(None);
        };
        for &u in &cells.cells[t] {
            self.spend()?;
            let mut child = cells.individualize(t, u);
            let inv = child.refine(self.graph);
            if self.invariants.get(depth + 1) != Some(&inv) {
                continue;
            }
            if let Some(p) = self.find(&child, depth + 1)? {
                return Ok(Some(p));
            }
        }
        Ok(None)
    }
}

fn find_root(parent: &mut [usize], mut v: usize) -> usize {
    while parent[v] != v {
        parent[v] = parent[parent[v]];
        v = parent[v];
    }
    v
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let (ra, rb) = (find_root(parent, a), find_root(parent, b));
    if ra != rb {
        let (lo, hi) = (ra.min(rb), ra.max(rb));
        parent[hi] = lo;
    }
}

/// Generators of the colour-preserving automorphism group of `graph`.
/// The identity is never returned, so a rigid graph yields an empty list.
pub fn find_automorphism_generators(
    graph: &ColoredGraph,
    budget: u64,
) -> Result<Vec<GraphAutomorphism>, SymmetryError> {
    let n = graph.num_nodes();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut root = Cells::from_colors(graph.colors());
    let mut invariants = vec![root.refine(graph)];
    let mut path = Vec::new();
    let mut cells = root;
    while let Some(t) = cells.target() {
        let vertex = cells.cells[t][0];
        let mut child = cells.individualize(t, vertex);
        invariants.push(child.refine(graph));
        path.push(Level {
            cells,
            target: t,
            vertex,
        });
        cells = child;
    }
    let mut search = Search {
        graph,
        invariants,
        first_leaf: cells.leaf_labelling(),
        budget,
        used: path.len() as u64,
    };

    let mut gens: Vec<GraphAutomorphism> = Vec::new();
    let mut orbit: Vec<usize> = (0..n).collect();
    for (depth, level) in path.iter().enumerate().rev() {
        // generators found deeper fix this level's prefix; so do those found here
        for &w in &level.cells.cells[level.target] {
            if w == level.vertex
                || find_root(&mut orbit, w) == find_root(&mut orbit, level.vertex)
                || find_root(&mut orbit, w) != w
            {
                continue;
            }
            search.spend()?;
            let mut child = level.cells.individualize(level.target, w);
            let inv = child.refine(graph);
            if search.invariants[depth + 1] != inv {
                continue;
            }
            if let Some(perm) = search.find(&child, depth + 1)? {
                for (v, &p) in perm.iter().enumerate() {
                    union(&mut orbit, v, p);
                }
                gens.push(GraphAutomorphism(perm));
            }
        }
    }
    debug_assert!(gens.iter().all(|g| graph.is_automorphism(g.as_slice())));
    Ok(gens)
}
