use std::fmt::Write as _;

use super::SymmetryError;

/// Undirected vertex-coloured simple graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColoredGraph {
    colors: Vec<usize>,
    adj: Vec<Vec<usize>>,
}

impl ColoredGraph {
    pub fn new(colors: Vec<usize>) -> Self {
        let n = colors.len();
        ColoredGraph {
            colors,
            adj: vec![Vec::new(); n],
        }
    }

    /// Adds `{u, v}`. Re-adding an existing edge is a no-op.
    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<(), SymmetryError> {
        let n = self.num_nodes();
        if u >= n || v >= n {
            return Err(SymmetryError::Graph(format!(
                "edge ({u}, {v}) out of range"
            )));
        }
        if u == v {
            return Err(SymmetryError::Graph(format!("self-loop at {u}")));
        }
        if let Err(pos) = self.adj[u].binary_search(&v) {
            self.adj[u].insert(pos, v);
            let pos = self.adj[v].binary_search(&u).unwrap_err();
            self.adj[v].insert(pos, u);
        }
        Ok(())
    }

    pub fn num_nodes(&self) -> usize {
        self.colors.len()
    }

    pub fn num_edges(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn color(&self, v: usize) -> usize {
        self.colors[v]
    }

    pub fn colors(&self) -> &[usize] {
        &self.colors
    }

    /// Sorted neighbours of `v`.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    /// Edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, ns)| ns.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    /// Whether `perm` (node `v` maps to `perm[v]`) is a colour- and
    /// edge-preserving bijection.
    pub fn is_automorphism(&self, perm: &[usize]) -> bool {
        let n = self.num_nodes();
        if perm.len() != n {
            return false;
        }
        let mut hit = vec![false; n];
        for &p in perm {
            if p >= n || std::mem::replace(&mut hit[p], true) {
                return false;
            }
        }
        (0..n).all(|v| {
            self.colors[v] == self.colors[perm[v]]
                && self.adj[v].len() == self.adj[perm[v]].len()
                && self.adj[v].iter().all(|&u| self.has_edge(perm[v], perm[u]))
        })
    }

    /// `p <n> <m>`, then `c <node> <color>` per node and `e <u> <v>` per edge.
    pub fn to_text(&self) -> String {
        let mut out = format!("p {} {}\n", self.num_nodes(), self.num_edges());
        for (v, c) in self.colors.iter().enumerate() {
            let _ = writeln!(out, "c {v} {c}");
        }
        for (u, v) in self.edges() {
            let _ = writeln!(out, "e {u} {v}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, SymmetryError> {
        let err = |line: usize, message: &str| SymmetryError::Parse {
            line,
            message: message.to_owned(),
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines.next().ok_or_else(|| err(1, "missing header"))?;
        let nums = |rest: &str, line: usize| -> Result<Vec<usize>, SymmetryError> {
            rest.split_whitespace()
                .map(|t| t.parse().map_err(|_| err(line, "expected integer")))
                .collect()
        };
        let h = header
            .strip_prefix("p ")
            .ok_or_else(|| err(hline, "expected `p <n> <m>`"))?;
        let [n, m] = nums(h, hline)?[..] else {
            return Err(err(hline, "expected `p <n> <m>`"));
        };
        let mut colors = vec![None; n];
        let mut edges = Vec::with_capacity(m);
        for (line, text) in lines {
            let (tag, rest) = text.split_at(1);
            let vals = nums(rest, line)?;
            match (tag, &vals[..]) {
                ("c", &[v, c]) if v < n => colors[v] = Some(c),
                ("e", &[u, v]) => edges.push((line, u, v)),
                _ => return Err(err(line, "expected `c <node> <color>` or `e <u> <v>`")),
            }
        }
        let colors = colors
            .into_iter()
            .enumerate()
            .map(|(v, c)| c.ok_or_else(|| err(hline, &format!("node {v} has no colour"))))
            .collect::<Result<Vec<_>, _>>()?;
        let mut g = ColoredGraph::new(colors);
        for (line, u, v) in edges {
            g.add_edge(u, v).map_err(|e| err(line, &e.to_string()))?;
        }
        if g.num_edges() != m {
            return Err(err(hline, "edge count does not match header"));
        }
        Ok(g)
    }
}
