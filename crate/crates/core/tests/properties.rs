use std::collections::BTreeSet;

use celp_core::centrality::{centrality, community_centers, CentralityKind};
use celp_core::community::{fluidc, CommunityPartition, DEFAULT_MAX_SWEEPS};
use celp_core::config::{content_hash, PipelineConfig};
use celp_core::enhance::{candidate_edges, enhance_graph, EnhanceSettings, ProbabilityMap};
use celp_core::eval::{heuristic_score, hit_rate_at_k, HeuristicKind};
use celp_core::features::{PairFeatureConfig, PairFeaturizer};
use celp_core::graph::{bfs_distances, build_graph, floor_fraction, split_edges, Graph, Pair, SplitFractions};
use celp_core::scorer::build_constraint;
use proptest::prelude::*;

fn graph_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    (3..=max_n).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n), 1..3 * n).prop_map(move |e| build_graph(&e, n, None).unwrap())
    })
}

fn partitioned(g: &Graph, k: usize, seed: u64) -> CommunityPartition {
    let p = fluidc(g, k, DEFAULT_MAX_SWEEPS, seed).unwrap();
    community_centers(g, &p, &centrality(g, CentralityKind::Pagerank).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn degree_sum_is_twice_edge_count(g in graph_strategy(40)) {
        prop_assert_eq!(g.degrees().iter().sum::<usize>(), 2 * g.edge_count());
        for (u, v) in g.edges() {
            prop_assert!(u < v);
            prop_assert!(g.has_edge(v, u));
        }
    }

    #[test]
    fn bfs_distances_respect_edges(g in graph_strategy(40), s in 0usize..40) {
        let s = s % g.n();
        let d = bfs_distances(&g, s).unwrap().dist;
        prop_assert_eq!(d[s], 0);
        for (u, v) in g.edges() {
            let (a, b) = (d[u], d[v]);
            if a < g.n() || b < g.n() {
                prop_assert!(a < g.n() && b < g.n());
                prop_assert!(a.abs_diff(b) <= 1);
            }
        }
    }

    #[test]
    fn split_partitions_the_edges(g in graph_strategy(40), seed in any::<u64>()) {
        prop_assume!(g.edge_count() >= 10);
        let sp = split_edges(&g, SplitFractions::default(), 3, seed).unwrap();
        let m = g.edge_count();
        prop_assert_eq!(sp.train_edges.len(), floor_fraction(0.8, m));
        prop_assert_eq!(sp.valid_edges.len(), floor_fraction(0.1, m));
        let all: BTreeSet<Pair> = sp.train_edges.iter().chain(&sp.valid_edges).chain(&sp.test_edges).copied().collect();
        prop_assert_eq!(all.len(), m);
        prop_assert_eq!(all, g.edges().collect::<BTreeSet<_>>());
        let negs: Vec<Pair> = sp.valid_neg.iter().chain(&sp.test_neg).copied().collect();
        prop_assert!(negs.iter().all(|&(u, v)| u != v && !g.has_edge(u, v)));
        prop_assert_eq!(negs.iter().collect::<BTreeSet<_>>().len(), negs.len());
    }

    #[test]
    fn fluidc_yields_a_valid_partition(g in graph_strategy(40), k in 1usize..5, seed in any::<u64>()) {
        prop_assume!(k <= g.n());
        let p = fluidc(&g, k, DEFAULT_MAX_SWEEPS, seed).unwrap();
        p.validate().unwrap();
        prop_assert_eq!(p.assignment.len(), g.n());
        for (c, members) in p.members.iter().enumerate() {
            prop_assert!(members.iter().all(|&v| p.assignment[v] == c));
        }
        prop_assert_eq!(p.members.iter().map(Vec::len).sum::<usize>(), g.n());
    }

    #[test]
    fn candidates_are_intra_community_non_edges(g in graph_strategy(40), top_m in 1usize..10, seed in any::<u64>()) {
        let p = partitioned(&g, 2.min(g.n()), seed);
        let scores = centrality(&g, CentralityKind::Pagerank).unwrap();
        let top: BTreeSet<usize> = scores.ranking().into_iter().take(top_m).collect();
        let cand = candidate_edges(&g, &scores, top_m, &p).unwrap();
        for &(u, v) in &cand {
            prop_assert!(u < v);
            prop_assert!(!g.has_edge(u, v));
            prop_assert_eq!(p.community_of(u), p.community_of(v));
            prop_assert!(top.contains(&u) || top.contains(&v));
        }
        prop_assert!(cand.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn enhancement_counts_follow_the_fractions(
        g in graph_strategy(30),
        gamma in 0.0f64..=1.0,
        eta in 0.0f64..=1.0,
        seed in any::<u64>(),
    ) {
        let p = partitioned(&g, 2.min(g.n()), seed);
        let scores = centrality(&g, CentralityKind::Pagerank).unwrap();
        let cand = candidate_edges(&g, &scores, g.n(), &p).unwrap();
        let prob: ProbabilityMap = cand
            .iter()
            .copied()
            .chain(g.edges())
            .enumerate()
            .map(|(i, e)| (e, ((i as u64).wrapping_mul(seed | 1) % 97) as f64 / 97.0))
            .collect();
        let (h, plan) = enhance_graph(&g, &cand, &prob, &EnhanceSettings { gamma, eta, top_m: g.n() }).unwrap();
        prop_assert_eq!(plan.added.len(), floor_fraction(gamma, cand.len()));
        prop_assert_eq!(plan.removed.len(), floor_fraction(eta, g.edge_count()));
        prop_assert!(plan.added.iter().all(|&(u, v)| h.has_edge(u, v) && !g.has_edge(u, v)));
        prop_assert!(plan.removed.iter().all(|&(u, v)| !h.has_edge(u, v) && g.has_edge(u, v)));
        prop_assert_eq!(h.edge_count(), g.edge_count() + plan.added.len() - plan.removed.len());
    }

    #[test]
    fn hit_rate_is_monotone_in_k(
        pos in prop::collection::vec(0u8..6, 0..20),
        neg in prop::collection::vec(0u8..6, 0..40),
        k in 1usize..50,
    ) {
        let pos: Vec<f64> = pos.into_iter().map(f64::from).collect();
        let neg: Vec<f64> = neg.into_iter().map(f64::from).collect();
        let a = hit_rate_at_k(&pos, &neg, k);
        let b = hit_rate_at_k(&pos, &neg, k + 1);
        prop_assert!(a <= b);
        prop_assert!((0.0..=1.0).contains(&a));
        let brute = if pos.is_empty() {
            0.0
        } else {
            pos.iter().filter(|&&p| neg.iter().filter(|&&x| x >= p).count() < k).count() as f64 / pos.len() as f64
        };
        prop_assert_eq!(a, brute);
    }

    #[test]
    fn heuristics_are_symmetric(g in graph_strategy(30), u in 0usize..30, v in 0usize..30) {
        let (u, v) = (u % g.n(), v % g.n());
        for kind in [HeuristicKind::Cn, HeuristicKind::Aa, HeuristicKind::Ra] {
            prop_assert_eq!(heuristic_score(&g, u, v, kind).unwrap(), heuristic_score(&g, v, u, kind).unwrap());
        }
    }

    #[test]
    fn pagerank_is_a_distribution(g in graph_strategy(40)) {
        let pr = centrality(&g, CentralityKind::Pagerank).unwrap().scores;
        prop_assert!((pr.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(pr.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn constraint_is_symmetric_and_intra_community(g in graph_strategy(25), seed in any::<u64>()) {
        let p = partitioned(&g, 2.min(g.n()), seed);
        let m = build_constraint(&p, &g, 2, 0.15).unwrap().to_dense();
        for i in 0..g.n() {
            for j in 0..g.n() {
                prop_assert!((m[[i, j]] - m[[j, i]]).abs() < 1e-15);
                if p.community_of(i) != p.community_of(j) {
                    prop_assert_eq!(m[[i, j]], 0.0);
                }
            }
        }
    }

    #[test]
    fn masking_matches_deletion(g in graph_strategy(20), seed in any::<u64>()) {
        let p = partitioned(&g, 2.min(g.n()), seed);
        let cfg = PairFeatureConfig { de_hops: vec![1, 2, 3], path_hops: vec![1, 3], sketch_dim: 8, ..Default::default() };
        let fz = PairFeaturizer::new(&g, &p, &cfg, seed).unwrap();
        for (u, v) in g.edges().take(5) {
            let masked = fz.pair_representation(u, v, None, true).unwrap();
            let plain = PairFeaturizer::new(&g.without_edge(u, v), &p, &cfg, seed)
                .unwrap()
                .pair_representation(u, v, None, false)
                .unwrap();
            prop_assert_eq!(masked.com, plain.com);
            for (a, b) in masked.to_vec().iter().zip(plain.to_vec()) {
                prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn pair_features_are_symmetric_up_to_transpose(g in graph_strategy(20), seed in any::<u64>(), u in 0usize..20, v in 0usize..20) {
        let (u, v) = (u % g.n(), v % g.n());
        let p = partitioned(&g, 2.min(g.n()), seed);
        let cfg = PairFeatureConfig { sketch_dim: 8, ..Default::default() };
        let fz = PairFeaturizer::new(&g, &p, &cfg, seed).unwrap();
        let a = fz.pair_representation(u, v, None, false).unwrap();
        let b = fz.pair_representation(v, u, None, false).unwrap();
        prop_assert_eq!(&a.path, &b.path);
        prop_assert_eq!(a.com.2, b.com.2);
        prop_assert_eq!((a.com.0, a.com.1), (b.com.1, b.com.0));
        let h = cfg.de_hops.len();
        for i in 0..h {
            for j in 0..h {
                prop_assert_eq!(a.de[i * h + j], b.de[j * h + i]);
            }
        }
    }

    #[test]
    fn config_hash_survives_toml(gamma in 0.0f64..1.0, k in 1usize..8, seeds in prop::collection::vec(any::<u32>(), 1..4)) {
        let mut cfg = PipelineConfig::from_toml_str("[data.sbm]\nblock_sizes = [20, 20]\np_in = 0.3\np_out = 0.05\n").unwrap();
        cfg.enhance.gamma = gamma;
        cfg.community.k = k;
        cfg.seeds = seeds.into_iter().map(u64::from).collect();
        let back = PipelineConfig::from_toml_str(&cfg.to_toml()).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.hash(), cfg.hash());
        prop_assert_eq!(content_hash(&cfg).len(), 16);
    }
}
