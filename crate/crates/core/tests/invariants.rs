use std::collections::BTreeSet;

use preorder_rl::stats::{bootstrap_ci, iqm, optimality_gap, prob_improvement};
use preorder_rl::{
    classify_pairs, global_leaf_survivors, oracle_survivors, qd, relate, scores, select, ActionRelation,
    BoolMatrix, ComparatorConfig, ObjectiveId, PreorderGraph, QuantileMatrix, RewardVector,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// DAG on `n` nodes: each candidate pair `(i, j)` with `i < j` is kept when
/// its bit is set, then nodes are relabelled by `perm`.
fn dag() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (1usize..=5).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let m = pairs.len();
        (
            Just(n),
            Just(pairs),
            proptest::collection::vec(any::<bool>(), m),
            Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
        )
            .prop_map(|(n, pairs, keep, perm)| {
                let edges = pairs
                    .into_iter()
                    .zip(keep)
                    .filter(|(_, k)| *k)
                    .map(|((i, j), _)| (perm[i], perm[j]))
                    .collect();
                (n, edges)
            })
    })
}

fn quantile_matrix(k: usize, a: usize) -> impl Strategy<Value = QuantileMatrix<f64>> {
    proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, k), a).prop_map(move |mut cols| {
        for c in cols.iter_mut() {
            c.sort_by(f64::total_cmp);
        }
        QuantileMatrix::from_columns(QuantileMatrix::midpoint_fractions(k), &cols).unwrap()
    })
}

fn sized_matrix() -> impl Strategy<Value = QuantileMatrix<f64>> {
    (1usize..=8, 1usize..=6).prop_flat_map(|(k, a)| quantile_matrix(k, a))
}

proptest! {
    #[test]
    fn topological_order_respects_edges((n, edges) in dag()) {
        let g = PreorderGraph::new(n, &edges).unwrap();
        let order: Vec<usize> = g.topological_sort().into_iter().map(ObjectiveId::index).collect();
        prop_assert_eq!(order.iter().copied().collect::<BTreeSet<_>>().len(), n);
        let pos = |x: usize| order.iter().position(|&o| o == x).unwrap();
        for &(h, l) in &edges {
            prop_assert!(pos(h) < pos(l));
            prop_assert!(g.precedes(ObjectiveId(h), ObjectiveId(l)));
        }
    }

    #[test]
    fn precedes_is_transitive_and_irreflexive((n, edges) in dag()) {
        let g = PreorderGraph::new(n, &edges).unwrap();
        for a in 0..n {
            prop_assert!(!g.precedes(ObjectiveId(a), ObjectiveId(a)));
            for b in 0..n {
                for c in 0..n {
                    if g.precedes(ObjectiveId(a), ObjectiveId(b)) && g.precedes(ObjectiveId(b), ObjectiveId(c)) {
                        prop_assert!(g.precedes(ObjectiveId(a), ObjectiveId(c)));
                    }
                }
            }
        }
    }

    #[test]
    fn back_edge_is_a_cycle((n, edges) in dag()) {
        if let Some(&(h, l)) = edges.first() {
            let mut bad = edges.clone();
            bad.push((l, h));
            prop_assert!(PreorderGraph::new(n, &bad).is_err());
        }
    }

    #[test]
    fn qd_is_antisymmetric_with_zero_diagonal(m in sized_matrix()) {
        let d = qd(&m);
        for a in 0..m.n_actions() {
            prop_assert_eq!(d.get(a, a), 0.0);
            for b in 0..m.n_actions() {
                prop_assert!((d.get(a, b) + d.get(b, a)).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn dom_and_dom_by_are_transposes(m in sized_matrix(), eps in 0.0f64..0.5, which in 0usize..3) {
        let cfg = [ComparatorConfig::qd(eps), ComparatorConfig::cvar(eps, 0.25), ComparatorConfig::mean_variance(eps, 1.0)][which];
        let d = classify_pairs(&m, &cfg, &BoolMatrix::ones(m.n_actions())).unwrap();
        for a in 0..m.n_actions() {
            prop_assert!(!d.dom.get(a, a));
            for b in 0..m.n_actions() {
                prop_assert_eq!(d.dom.get(a, b), d.dom_by.get(b, a));
                prop_assert!(!(d.dom.get(a, b) && d.dom_by.get(a, b)));
            }
        }
    }

    #[test]
    fn positive_affine_maps_keep_scores_order(m in sized_matrix(), alpha in 0.1f64..10.0, beta in -10.0f64..10.0) {
        let cfg = ComparatorConfig::qd(0.0);
        let s0 = scores(&m, &cfg).unwrap();
        let s1 = scores(&m.affine(alpha, beta), &cfg).unwrap();
        for (x, y) in s0.iter().zip(&s1) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn every_survivor_set_is_nonempty_and_nested(
        (n, edges) in dag(),
        pool in (1usize..=8, 1usize..=6).prop_flat_map(|(k, a)| proptest::collection::vec(quantile_matrix(k, a), 5)),
        eps in 0.0f64..0.5,
    ) {
        let g = PreorderGraph::new(n, &edges).unwrap();
        let mats = &pool[..n];
        let cfgs = vec![ComparatorConfig::qd(eps); n];
        let st = select(&g, mats, &cfgs).unwrap();
        for r in 0..n {
            prop_assert!(!st.survivors[r].is_empty());
            let parents = g.parents(ObjectiveId(r)).unwrap();
            if !parents.is_empty() {
                let parent_union: BTreeSet<usize> =
                    parents.iter().flat_map(|q| st.survivors[q.index()].iter().copied()).collect();
                prop_assert!(st.survivors[r].is_subset(&parent_union));
            }
        }
        prop_assert!(!global_leaf_survivors(&st, &g).is_empty());
    }

    #[test]
    fn relate_is_antisymmetric((n, edges) in dag(), seed in any::<u64>()) {
        use rand::Rng;
        let g = PreorderGraph::new(n, &edges).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = RewardVector((0..n).map(|_| rng.random_range(0..3) as f64).collect());
        let y = RewardVector((0..n).map(|_| rng.random_range(0..3) as f64).collect());
        prop_assert_eq!(relate(&g, &x, &y).unwrap(), relate(&g, &y, &x).unwrap().reversed());
        prop_assert_eq!(relate(&g, &x, &x).unwrap(), ActionRelation::Indifferent);
    }

    #[test]
    fn iqm_lies_between_min_and_max(v in proptest::collection::vec(-100.0f64..100.0, 1..40)) {
        let m = iqm(&v).unwrap();
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lo - 1e-9 <= m && m <= hi + 1e-9);
    }

    #[test]
    fn improvement_probabilities_are_complementary(
        x in proptest::collection::vec(0.0f64..1.0, 1..10),
        y in proptest::collection::vec(0.0f64..1.0, 1..10),
    ) {
        let p = prob_improvement(&x, &y).unwrap();
        let q = prob_improvement(&y, &x).unwrap();
        prop_assert!((p + q - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn chain_oracle_matches_lexicographic_order() {
    let g = PreorderGraph::new(3, &[(0, 1), (1, 2)]).unwrap();
    let rewards = vec![
        RewardVector(vec![1.0, 0.0, 5.0]),
        RewardVector(vec![1.0, 2.0, 0.0]),
        RewardVector(vec![0.0, 9.0, 9.0]),
        RewardVector(vec![1.0, 2.0, 1.0]),
    ];
    let s = oracle_survivors(&g, &rewards).unwrap();
    assert_eq!(s[0], BTreeSet::from([0, 1, 3]));
    assert_eq!(s[1], BTreeSet::from([1, 3]));
    assert_eq!(s[2], BTreeSet::from([3]));
}

#[test]
fn stats_reference_values() {
    assert_eq!(iqm(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]).unwrap(), 4.5);
    assert_eq!(optimality_gap(&[0.5, 1.5], 1.0).unwrap(), 0.25);
    assert_eq!(prob_improvement(&[1.0, 2.0], &[0.0, 1.0]).unwrap(), 0.875);
}

#[test]
fn bootstrap_interval_brackets_the_point_estimate() {
    let v: Vec<f64> = (0..40).map(|i| (i % 7) as f64).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (lo, hi) = bootstrap_ci(iqm, &v, 1000, 0.95, &mut rng).unwrap();
    let point = iqm(&v).unwrap();
    assert!(lo <= point && point <= hi, "{lo} {point} {hi}");
    assert!(bootstrap_ci(iqm, &v, 10, 0.95, &mut rng).is_err());
}
