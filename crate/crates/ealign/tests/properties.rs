//! Randomized invariants over graphs, splits, rankings, selectors and the
//! pool bookkeeping.

use std::collections::BTreeSet;

use proptest::prelude::*;

use ealign::heuristics::{
    Heuristic, SelectorContext, StaticKind, StaticRankings,
};
use ealign::kg::{
    compute_partition, generate_synthetic_pair, remove_nodes, split_alignments, GraphView,
    KnowledgeGraph, KnowledgeGraphPair, Side, SideNode, SyntheticParams,
};
use ealign::metrics::{avc_ranking, betweenness_ranking, degree_ranking};
use ealign::model::{ModelConfig, ModelSnapshot, ModelState, NormAdjacency};
use ealign::simulator::{apply_response, init_pool, oracle_answer, Dataset, Oracle};

fn graph_from_edges(n: usize, edges: &[(usize, usize, usize)], n_rel: usize) -> KnowledgeGraph {
    let mut g = KnowledgeGraph::new();
    for i in 0..n {
        g.intern_entity(&format!("n{i}"));
    }
    for r in 0..n_rel {
        g.intern_relation(&format!("r{r}"));
    }
    for &(h, r, t) in edges {
        g.add_triple(h % n, r % n_rel, t % n);
    }
    g
}

fn pair_strategy() -> impl Strategy<Value = KnowledgeGraphPair> {
    (2usize..12, 2usize..12, 1usize..3).prop_flat_map(|(nl, nr, nrel)| {
        let el = prop::collection::vec((0..nl, 0..nrel, 0..nl), 0..30);
        let er = prop::collection::vec((0..nr, 0..nrel, 0..nr), 0..30);
        (el, er).prop_map(move |(el, er)| KnowledgeGraphPair {
            left: graph_from_edges(nl, &el, nrel),
            right: graph_from_edges(nr, &er, nrel),
        })
    })
}

fn synthetic_dataset(seed: u64) -> Dataset {
    let params = SyntheticParams {
        n_core: 20,
        n_exclusive_left: 4,
        n_exclusive_right: 4,
        n_relations: 2,
        edge_factor: 3.0,
        perturbation: 0.1,
        seed,
    };
    let (pair, truth) = generate_synthetic_pair(&params).unwrap();
    let alignments = split_alignments(&truth, 0.8, 0.2, seed).unwrap();
    Dataset::new(pair, alignments)
}

proptest! {
    /// Aligned and exclusive sets partition each side's node set.
    #[test]
    fn partition_covers_both_sides(pair in pair_strategy(), seed in 0u64..100) {
        let nl = pair.left.num_entities();
        let nr = pair.right.num_entities();
        let mut pairs = BTreeSet::new();
        for i in 0..nl.min(nr) {
            if (seed + i as u64) % 3 != 0 {
                pairs.insert((i, i));
            }
        }
        let alignments = match split_alignments(&pairs, 0.6, 0.4, seed) {
            Ok(a) => a,
            Err(_) => return Ok(()), // too few pairs for a nonempty split
        };
        let p = compute_partition(&pair, &alignments);
        let left: BTreeSet<usize> = p.aligned_left.union(&p.exclusive_left).copied().collect();
        prop_assert_eq!(left, (0..nl).collect::<BTreeSet<_>>());
        prop_assert!(p.aligned_left.is_disjoint(&p.exclusive_left));
        let right: BTreeSet<usize> = p.aligned_right.union(&p.exclusive_right).copied().collect();
        prop_assert_eq!(right, (0..nr).collect::<BTreeSet<_>>());
        prop_assert!(p.aligned_right.is_disjoint(&p.exclusive_right));
    }

    /// split_alignments produces three disjoint sets covering the input.
    #[test]
    fn split_is_a_partition(n in 3usize..60, seed in 0u64..1000) {
        let pairs: BTreeSet<(usize, usize)> = (0..n).map(|i| (i, i)).collect();
        let a = match split_alignments(&pairs, 0.7, 0.2, seed) {
            Ok(a) => a,
            Err(_) => return Ok(()),
        };
        prop_assert!(a.train.is_disjoint(&a.validation));
        prop_assert!(a.train.is_disjoint(&a.test));
        prop_assert!(a.validation.is_disjoint(&a.test));
        let mut all = a.train.clone();
        all.extend(&a.validation);
        all.extend(&a.test);
        prop_assert_eq!(all, pairs);
    }

    /// Masking is idempotent and only ever drops triples.
    #[test]
    fn remove_nodes_idempotent(pair in pair_strategy(), mask in prop::collection::vec(0usize..12, 0..6)) {
        let g = &pair.left;
        let mask: Vec<usize> = mask.into_iter().filter(|&n| n < g.num_entities()).collect();
        let once = remove_nodes(g, mask.iter().copied());
        let twice = once.without(mask.iter().copied());
        prop_assert_eq!(
            once.triples().collect::<Vec<_>>(),
            twice.triples().collect::<Vec<_>>()
        );
        let full: BTreeSet<_> = GraphView::full(g).triples().collect();
        for t in once.triples() {
            prop_assert!(full.contains(&t));
        }
        for (h, _, t) in once.triples() {
            prop_assert!(!mask.contains(&h) && !mask.contains(&t));
        }
    }

    /// Each static ranking lists every node of both graphs exactly once.
    #[test]
    fn rankings_are_permutations(pair in pair_strategy()) {
        let all: BTreeSet<SideNode> = (0..pair.left.num_entities())
            .map(|n| (Side::Left, n))
            .chain((0..pair.right.num_entities()).map(|n| (Side::Right, n)))
            .collect();
        for ranking in [degree_ranking(&pair), betweenness_ranking(&pair), avc_ranking(&pair)] {
            prop_assert_eq!(ranking.len(), all.len());
            let listed: BTreeSet<SideNode> = ranking.nodes().collect();
            prop_assert_eq!(&listed, &all);
        }
    }

    /// Every selector returns a duplicate-free batch of exactly
    /// min(budget, |pool|) pool members, deterministically.
    #[test]
    fn selector_batches_are_valid(seed in 0u64..20, budget in 1usize..12) {
        let ds = synthetic_dataset(seed);
        let rankings = StaticRankings {
            degree: degree_ranking(&ds.pair),
            betweenness: betweenness_ranking(&ds.pair),
            avc: avc_ranking(&ds.pair),
        };
        let mut state = init_pool(&ds.partition, &ds.alignments).unwrap();
        let oracle = Oracle {
            train: &ds.alignments.train,
            exclusive_left: &ds.partition.exclusive_left,
            exclusive_right: &ds.partition.exclusive_right,
        };
        // label a few nodes first so model-based selectors have signal
        let warm: Vec<SideNode> = state.pool.iter().copied().take(6).collect();
        let resp = oracle_answer(&state, &warm, &oracle).unwrap();
        apply_response(&mut state, &resp);

        let cfg = ModelConfig { embedding_dim: 4, ..ModelConfig::default() };
        let model = ModelState::init(cfg, ds.pair.left.num_entities(), ds.pair.right.num_entities()).unwrap();
        let adj_l = NormAdjacency::from_view(&GraphView::full(&ds.pair.left));
        let adj_r = NormAdjacency::from_view(&GraphView::full(&ds.pair.right));
        let cand_l: Vec<usize> = (0..ds.pair.left.num_entities()).collect();
        let cand_r: Vec<usize> = (0..ds.pair.right.num_entities()).collect();
        let snapshot = ModelSnapshot::new(&model, &adj_l, &adj_r, cand_l, cand_r, seed).unwrap();

        let labeled: BTreeSet<SideNode> = state
            .found_alignments
            .iter()
            .flat_map(|&(l, r)| [(Side::Left, l), (Side::Right, r)])
            .chain(state.found_exclusive_left.iter().map(|&n| (Side::Left, n)))
            .chain(state.found_exclusive_right.iter().map(|&n| (Side::Right, n)))
            .collect();
        let ctx = SelectorContext {
            pool: &state.pool,
            found_alignments: &state.found_alignments,
            labeled: &labeled,
            snapshot: Some(&snapshot),
            static_rankings: &rankings,
            history: &[],
            budget: budget.min(state.pool.len()),
            seed,
        };
        let heuristics = [
            Heuristic::Random,
            Heuristic::Static(StaticKind::Degree),
            Heuristic::Static(StaticKind::Betweenness),
            Heuristic::Static(StaticKind::Avc),
            Heuristic::Coreset,
            Heuristic::Esccn { n_clusters: 3, inner: StaticKind::Degree },
            Heuristic::Bald { t_runs: 3, tau: 0.5 },
            Heuristic::Prexp { threshold: 0.5, fallback: StaticKind::Degree, min_samples_per_class: 2 },
        ];
        for h in &heuristics {
            let batch = h.select(&ctx).unwrap();
            prop_assert_eq!(batch.len(), ctx.budget, "heuristic {:?}", h);
            let distinct: BTreeSet<SideNode> = batch.iter().copied().collect();
            prop_assert_eq!(distinct.len(), batch.len(), "duplicates from {:?}", h);
            for n in &batch {
                prop_assert!(state.pool.contains(n), "{:?} picked non-pool {:?}", h, n);
            }
            prop_assert_eq!(&batch, &h.select(&ctx).unwrap(), "nondeterministic {:?}", h);
        }
    }

    /// The pool update is exactly P \ (A^L ∪ A^R ∪ X^L ∪ X^R) and found sets
    /// only ever grow with train pairs and true exclusives.
    #[test]
    fn pool_update_set_algebra(seed in 0u64..50, picks in prop::collection::vec(0usize..1000, 1..8)) {
        let ds = synthetic_dataset(seed);
        let oracle = Oracle {
            train: &ds.alignments.train,
            exclusive_left: &ds.partition.exclusive_left,
            exclusive_right: &ds.partition.exclusive_right,
        };
        let mut state = init_pool(&ds.partition, &ds.alignments).unwrap();
        for &pick in &picks {
            if state.pool.is_empty() {
                break;
            }
            let node = *state.pool.iter().nth(pick % state.pool.len()).unwrap();
            let resp = oracle_answer(&state, &[node], &oracle).unwrap();
            let before = state.pool.clone();
            apply_response(&mut state, &resp);
            let mut removed: BTreeSet<SideNode> = BTreeSet::new();
            for &(l, r) in &resp.alignments {
                removed.insert((Side::Left, l));
                removed.insert((Side::Right, r));
            }
            removed.extend(resp.exclusive_left.iter().map(|&n| (Side::Left, n)));
            removed.extend(resp.exclusive_right.iter().map(|&n| (Side::Right, n)));
            let expect: BTreeSet<SideNode> = before.difference(&removed).copied().collect();
            prop_assert_eq!(&state.pool, &expect);
            prop_assert!(state.found_alignments.is_subset(&ds.alignments.train));
            prop_assert!(state.found_exclusive_left.is_subset(&ds.partition.exclusive_left));
            prop_assert!(state.found_exclusive_right.is_subset(&ds.partition.exclusive_right));
        }
    }
}
