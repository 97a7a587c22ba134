mod common;

use bvmc_core::group::orbit_enumerate;
use bvmc_core::harness::kl_divergence;
use bvmc_core::symmetry::{
    find_automorphism_generators, parse_symmetry_file, write_symmetry_file, DEFAULT_NODE_BUDGET,
};
use bvmc_core::{BlockPartition, BvSymmetry, ColoredGraph, MarginalEstimate, SymmetryGroup};
use common::{brute_force_automorphisms, closure, random_partition, random_state, symmetric_model};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_graph(seed: u64, max_nodes: usize) -> ColoredGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max_nodes);
    let colors = rng.gen_range(1..=3);
    let mut g = ColoredGraph::new((0..n).map(|_| rng.gen_range(0..colors)).collect());
    let p = rng.gen_range(0.1..0.7);
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                g.add_edge(u, v).unwrap();
            }
        }
    }
    g
}

fn detected(seed: u64) -> (bvmc_core::Model, SymmetryGroup) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.gen_range(2..=3);
    let m = symmetric_model(k, rng.gen_range(2..=3), rng.gen_range(0..2), &mut rng)
        .normalize_to_clauses();
    let p = if rng.gen_bool(0.3) {
        BlockPartition::singleton(m.num_vars())
    } else {
        random_partition(m.num_vars(), &mut rng)
    };
    let g = SymmetryGroup::detect(&m, &p, DEFAULT_NODE_BUDGET).unwrap();
    (m, g)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn graph_text_round_trips(seed in any::<u64>()) {
        let g = random_graph(seed, 12);
        let back = ColoredGraph::parse(&g.to_text()).unwrap();
        prop_assert_eq!(back.colors(), g.colors());
        prop_assert_eq!(back.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());
    }

    #[test]
    fn search_generates_the_full_group(seed in any::<u64>()) {
        let g = random_graph(seed, 7);
        let gens: Vec<Vec<usize>> = find_automorphism_generators(&g, DEFAULT_NODE_BUDGET)
            .unwrap()
            .into_iter()
            .map(|a| a.into_inner())
            .collect();
        for p in &gens {
            prop_assert!(g.is_automorphism(p));
        }
        prop_assert_eq!(closure(&gens, g.num_nodes()), brute_force_automorphisms(&g));
    }

    #[test]
    fn kl_is_non_negative(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..6);
        let row = |rng: &mut ChaCha8Rng, d: usize| {
            let w: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..1.0)).collect();
            let z: f64 = w.iter().sum();
            w.into_iter().map(|x| x / z).collect::<Vec<_>>()
        };
        let names: Vec<String> = (0..n).map(|i| format!("V{i}")).collect();
        let domains: Vec<usize> = (0..n).map(|_| rng.gen_range(2..4)).collect();
        let p: Vec<Vec<f64>> = domains.iter().map(|&d| row(&mut rng, d)).collect();
        let q: Vec<Vec<f64>> = domains.iter().map(|&d| row(&mut rng, d)).collect();
        let (p, q) = (MarginalEstimate::new(names.clone(), p, 1), MarginalEstimate::new(names, q, 1));
        let kl = kl_divergence(&p, &q).unwrap();
        prop_assert!(kl.is_finite() && kl >= 0.0);
        prop_assert!(kl_divergence(&p, &p).unwrap() < 1e-5);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn symmetries_preserve_weights(seed in any::<u64>()) {
        let (m, g) = detected(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 9);
        for h in g.generators() {
            for _ in 0..30 {
                let s = random_state(&m.domain_sizes(), &mut rng);
                prop_assert!((m.log_weight(&s) - m.log_weight(&g.apply(h, &s))).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn group_is_closed_and_acts(seed in any::<u64>()) {
        let (m, g) = detected(seed);
        let values = g.block_values();
        let gens = g.generators();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 5);
        for a in gens {
            prop_assert!(a.inverse().compose(a).unwrap().is_identity());
            for b in gens {
                let ab = a.compose(b).unwrap();
                prop_assert!(ab.validate(values).is_ok());
                let s = random_state(&m.domain_sizes(), &mut rng);
                // composition applies the right factor first
                prop_assert_eq!(g.apply(&ab, &s), g.apply(a, &g.apply(b, &s)));
                prop_assert!((m.log_weight(&s) - m.log_weight(&g.apply(&ab, &s))).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn orbits_partition_the_states(seed in any::<u64>()) {
        let (m, g) = detected(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 3);
        let s = random_state(&m.domain_sizes(), &mut rng);
        let orbit = orbit_enumerate(&g, &s, 1 << 16);
        prop_assert!(orbit.complete);
        let w = m.log_weight(&s);
        for t in &orbit.states {
            prop_assert!((m.log_weight(t) - w).abs() < 1e-9);
            let mut back = orbit_enumerate(&g, t, 1 << 16).states;
            let mut fwd = orbit.states.clone();
            back.sort();
            fwd.sort();
            prop_assert_eq!(back, fwd);
        }
    }

    #[test]
    fn symmetry_file_round_trips(seed in any::<u64>()) {
        let (_, g) = detected(seed);
        let n = g.block_values().len();
        let sections = vec![("00ff00ff00ff00ff".to_string(), g.generators().to_vec())];
        let back = parse_symmetry_file(&write_symmetry_file(&sections), |_| Some(n)).unwrap();
        prop_assert_eq!(back, sections);
    }
}

#[test]
fn cycle_notation_round_trips() {
    let s = BvSymmetry::parse_cycles("(0 2)(1 3 4)", 6).unwrap();
    assert_eq!(s.to_cycles(), "(0 2)(1 3 4)");
    assert_eq!(
        BvSymmetry::parse_cycles("()", 3).unwrap(),
        BvSymmetry::identity(3)
    );
    assert!(BvSymmetry::parse_cycles("(0 7)", 3).is_err());
}
