use proptest::prelude::*;
use sts_core::generation::{random_sts, triangle_removal};
use sts_core::hypergraph::{choose2, Triple, TripleSystem};
use sts_core::matching::{greedy_maximal_matching, ps_decompose};
use sts_core::partition::{good_partition, Part, PartitionOptions};
use sts_core::rng::derive_seed;

fn sts_order() -> impl Strategy<Value = usize> {
    prop::sample::select(vec![7usize, 9, 13, 15, 19, 21, 25, 27])
}

fn pair_multiplicities(n: usize, edges: &[Triple]) -> Vec<u32> {
    let mut seen = vec![0u32; n * n];
    for e in edges {
        for (a, b) in e.pairs() {
            seen[a * n + b] += 1;
        }
    }
    seen
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_sts_covers_each_pair_once(n in sts_order(), seed in any::<u64>()) {
        let s = random_sts(n, seed).unwrap();
        let seen = pair_multiplicities(n, s.edges());
        for a in 0..n {
            for b in a + 1..n {
                prop_assert_eq!(seen[a * n + b], 1);
            }
        }
        prop_assert_eq!(s.edge_count(), choose2(n) / 3);
    }

    #[test]
    fn triangle_removal_keeps_pairs_disjoint(n in 6usize..40, frac in 0.0f64..0.6, seed in any::<u64>()) {
        let m = (frac * (choose2(n) / 3) as f64) as usize;
        let out = triangle_removal(n, m, seed).unwrap();
        let placed = out.partial.system().edges();
        prop_assert!(out.aborted || placed.len() == m);
        let seen = pair_multiplicities(n, placed);
        for a in 0..n {
            for b in a + 1..n {
                let used = seen[a * n + b];
                prop_assert!(used <= 1);
                prop_assert_eq!(used == 0, out.leave.has(a, b));
            }
        }
    }

    #[test]
    fn greedy_matching_is_maximal(n in sts_order(), seed in any::<u64>()) {
        let s = random_sts(n, seed).unwrap();
        let m = greedy_maximal_matching(&s, seed ^ 1);
        let mut hit = vec![false; n];
        for e in m.edges() {
            prop_assert!(s.has_edge(*e));
            for v in e.vertices() {
                prop_assert!(!hit[v]);
                hit[v] = true;
            }
        }
        for e in s.edges() {
            prop_assert!(e.vertices().iter().any(|&v| hit[v]));
        }
    }

    #[test]
    fn decomposition_classes_are_disjoint_matchings(n in sts_order(), seed in any::<u64>()) {
        let s = random_sts(n, seed).unwrap();
        let d = ps_decompose(&s).unwrap();
        let mut used = std::collections::HashSet::new();
        for m in &d.matchings {
            let mut hit = vec![false; n];
            for e in m.edges() {
                prop_assert!(s.has_edge(*e));
                prop_assert!(used.insert(*e));
                for v in e.vertices() {
                    prop_assert!(!hit[v]);
                    hit[v] = true;
                }
            }
        }
        prop_assert_eq!(used.len(), s.edge_count());
    }

    #[test]
    fn partition_parts_have_their_shapes(n in sts_order(), delta in 0.01f64..0.2, seed in any::<u64>()) {
        let s: TripleSystem = random_sts(n, seed).unwrap();
        let b = good_partition(&s, delta, seed, &PartitionOptions::default()).unwrap();
        prop_assert_eq!(b.assignment.len(), s.edge_count());
        for (e, part) in s.edges().iter().zip(&b.assignment) {
            let in_w = |i: usize| e.vertices().iter().filter(|&&v| b.in_w[i][v]).count();
            let inside = (0..b.ell).filter(|&i| in_w(i) == 3).count();
            match *part {
                Part::G(i) => prop_assert_eq!(in_w(i), 0),
                Part::H(i) => prop_assert_eq!(in_w(i), 2),
                Part::F(i) => prop_assert!(in_w(i) == 3 && inside == 1),
                Part::Q => {}
            }
        }
    }

    #[test]
    fn derived_seeds_differ_across_trials(master in any::<u64>(), i in 0u64..1000, j in 0u64..1000) {
        prop_assume!(i != j);
        prop_assert_ne!(derive_seed(master, i), derive_seed(master, j));
        prop_assert_eq!(derive_seed(master, i), derive_seed(master, i));
    }
}
