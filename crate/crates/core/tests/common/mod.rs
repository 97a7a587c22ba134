//! Test-only oracles and model builders shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet, VecDeque};

use bvmc_core::model::{Connective, Literal};
use bvmc_core::partition::Block;
use bvmc_core::{BlockPartition, ColoredGraph, Model, ModelBuilder, State};
use rand::seq::SliceRandom;
use rand::Rng;

/// Every state of a model with the given domains, in odometer order.
pub fn all_states(domains: &[usize]) -> Vec<State> {
    let mut out = Vec::new();
    let mut cur = vec![0; domains.len()];
    loop {
        out.push(State::new(cur.clone()));
        let mut i = 0;
        loop {
            if i == cur.len() {
                return out;
            }
            cur[i] += 1;
            if cur[i] < domains[i] {
                break;
            }
            cur[i] = 0;
            i += 1;
        }
    }
}

pub fn random_state<R: Rng>(domains: &[usize], rng: &mut R) -> State {
    State::new(domains.iter().map(|&d| rng.gen_range(0..d)).collect())
}

/// log Σ exp over all states.
pub fn log_partition(model: &Model) -> f64 {
    let lw: Vec<f64> = all_states(&model.domain_sizes())
        .iter()
        .map(|s| model.log_weight(s))
        .collect();
    let m = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + lw.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

type TemplateFeature = (Connective, f64, Vec<(usize, usize)>);

/// A random binary-variable feature list over `k` variables.
fn random_template<R: Rng>(
    k: usize,
    features: usize,
    pool: &[f64],
    rng: &mut R,
) -> Vec<TemplateFeature> {
    (0..features)
        .map(|_| {
            let len = rng.gen_range(1..=k.min(3));
            let mut vars: Vec<usize> = (0..k).collect();
            vars.shuffle(rng);
            let lits = vars[..len]
                .iter()
                .map(|&v| (v, rng.gen_range(0..2)))
                .collect();
            let c = if rng.gen_bool(0.5) {
                Connective::Or
            } else {
                Connective::And
            };
            (c, *pool.choose(rng).unwrap(), lits)
        })
        .collect()
}

/// `copies` disjoint copies of one random template over `k` binary
/// variables, some with values flipped, plus `extra` random features over
/// all variables. Copies give the model non-trivial symmetries.
pub fn symmetric_model<R: Rng>(k: usize, copies: usize, extra: usize, rng: &mut R) -> Model {
    let pool = [0.5, 1.0, 1.5];
    let template = random_template(k, k + 1, &pool, rng);
    let mut b = ModelBuilder::<f64>::new();
    let n = k * copies;
    for v in 0..n {
        b.var(format!("X{v}"), 2).unwrap();
    }
    for c in 0..copies {
        let flip: Vec<usize> = (0..k).map(|_| usize::from(rng.gen_bool(0.3))).collect();
        for (conn, w, lits) in &template {
            let lits = lits
                .iter()
                .map(|&(v, x)| Literal::eq(c * k + v, x ^ flip[v]))
                .collect();
            b.feature(*conn, *w, lits).unwrap();
        }
    }
    for (conn, w, lits) in random_template(n, extra, &pool, rng) {
        let lits = lits.into_iter().map(|(v, x)| Literal::eq(v, x)).collect();
        b.feature(conn, w, lits).unwrap();
    }
    b.build()
}

/// Random partition into blocks of size one or two.
pub fn random_partition<R: Rng>(n: usize, rng: &mut R) -> BlockPartition {
    let mut vars: Vec<usize> = (0..n).collect();
    vars.shuffle(rng);
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < n {
        if i + 1 < n && rng.gen_bool(0.5) {
            blocks.push(Block::new(vec![vars[i], vars[i + 1]]).unwrap());
            i += 2;
        } else {
            blocks.push(Block::new(vec![vars[i]]).unwrap());
            i += 1;
        }
    }
    BlockPartition::new(n, blocks).unwrap()
}

/// All colour-preserving automorphisms by trying every permutation.
pub fn brute_force_automorphisms(g: &ColoredGraph) -> HashSet<Vec<usize>> {
    let n = g.num_nodes();
    let mut out = HashSet::new();
    let mut perm = Vec::with_capacity(n);
    let mut used = vec![false; n];
    extend(g, &mut perm, &mut used, &mut out);
    out
}

fn extend(
    g: &ColoredGraph,
    perm: &mut Vec<usize>,
    used: &mut [bool],
    out: &mut HashSet<Vec<usize>>,
) {
    let v = perm.len();
    if v == g.num_nodes() {
        out.insert(perm.clone());
        return;
    }
    for w in 0..g.num_nodes() {
        if used[w] || g.color(w) != g.color(v) {
            continue;
        }
        // adjacency to already-placed nodes must be preserved
        if (0..v).any(|u| g.has_edge(u, v) != g.has_edge(perm[u], w)) {
            continue;
        }
        used[w] = true;
        perm.push(w);
        extend(g, perm, used, out);
        perm.pop();
        used[w] = false;
    }
}

/// Closure of the generators under composition.
pub fn closure(gens: &[Vec<usize>], n: usize) -> HashSet<Vec<usize>> {
    let id: Vec<usize> = (0..n).collect();
    let mut seen = HashSet::from([id.clone()]);
    let mut queue = VecDeque::from([id]);
    while let Some(p) = queue.pop_front() {
        for g in gens {
            let q: Vec<usize> = p.iter().map(|&i| g[i]).collect();
            if seen.insert(q.clone()) {
                queue.push_back(q);
            }
        }
    }
    seen
}

type FeatureKey = (u64, BTreeSet<(usize, usize)>);

/// Weight bits and satisfying variable-value pairs of each clause.
fn clause_keys(model: &Model) -> Vec<FeatureKey> {
    let mut keys: Vec<FeatureKey> = model
        .features()
        .iter()
        .map(|f| {
            assert_eq!(f.connective, Connective::Or, "oracle expects clauses");
            let pairs = f
                .literals
                .iter()
                .flat_map(|l| {
                    (0..model.domain_size(l.var))
                        .filter(|&x| l.holds(x))
                        .map(move |x| (l.var, x))
                })
                .collect();
            (f.weight.to_bits(), pairs)
        })
        .collect();
    keys.sort();
    keys
}

/// Variable-value permutations of a binary clausal model that map its clause
/// multiset onto itself, as `(variable image, value flip)` per variable.
pub fn vv_symmetries(model: &Model) -> Vec<(Vec<usize>, Vec<usize>)> {
    let n = model.num_vars();
    assert!(n <= 7 && model.domain_sizes().iter().all(|&d| d == 2));
    let base = clause_keys(model);
    let mut out = Vec::new();
    let mut sigma: Vec<usize> = (0..n).collect();
    permutations(&mut sigma, 0, &mut |sigma| {
        for mask in 0..(1usize << n) {
            let flip: Vec<usize> = (0..n).map(|v| (mask >> v) & 1).collect();
            let mut mapped: Vec<FeatureKey> = base
                .iter()
                .map(|(w, pairs)| {
                    (
                        *w,
                        pairs
                            .iter()
                            .map(|&(v, x)| (sigma[v], x ^ flip[v]))
                            .collect(),
                    )
                })
                .collect();
            mapped.sort();
            if mapped == base {
                out.push((sigma.to_vec(), flip));
            }
        }
    });
    out
}

fn permutations(xs: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == xs.len() {
        f(xs);
        return;
    }
    for i in k..xs.len() {
        xs.swap(k, i);
        permutations(xs, k + 1, f);
        xs.swap(k, i);
    }
}

pub fn apply_vv(sym: &(Vec<usize>, Vec<usize>), s: &State) -> State {
    let (sigma, flip) = sym;
    let mut out = vec![0; s.len()];
    for v in 0..s.len() {
        out[sigma[v]] = s[v] ^ flip[v];
    }
    State::new(out)
}
