//! Pairwise action relations on raw reward vectors.
//!
//! This is the exact, noise-free counterpart of the distributional pipeline
//! and serves as its semantic reference in tests.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::preorder::{ObjectiveId, PreorderGraph};
use crate::scalar::Scalar;
use crate::selection::aggregate;

/// One reward per objective.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardVector<T>(pub Vec<T>);

impl<T: Scalar> RewardVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("reward vector has non-finite entries".into()));
        }
        Ok(Self(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<T> From<Vec<T>> for RewardVector<T> {
    fn from(v: Vec<T>) -> Self {
        Self(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionRelation {
    Dominates,
    DominatedBy,
    Indifferent,
    Incomparable,
}

impl ActionRelation {
    pub fn reversed(self) -> Self {
        match self {
            Self::Dominates => Self::DominatedBy,
            Self::DominatedBy => Self::Dominates,
            other => other,
        }
    }
}

/// Relation of action `a` (rewards `ra`) to action `b` (rewards `rb`) under `g`.
///
/// Incomparability is checked first: if `a` and `b` each win on an objective
/// and the two objectives are unordered, the pair is `Incomparable` even when
/// one side would otherwise satisfy the dominance clause through some other,
/// higher-priority objective.
pub fn relate<T: Scalar>(
    g: &PreorderGraph,
    ra: &RewardVector<T>,
    rb: &RewardVector<T>,
) -> Result<ActionRelation> {
    let n = g.n_objectives();
    for v in [ra, rb] {
        if v.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: v.len(),
            });
        }
    }
    let a_wins: Vec<usize> = (0..n).filter(|&i| ra.0[i] > rb.0[i]).collect();
    let b_wins: Vec<usize> = (0..n).filter(|&i| rb.0[i] > ra.0[i]).collect();

    let unordered_conflict = a_wins.iter().any(|&i| {
        b_wins
            .iter()
            .any(|&j| g.incomparable(ObjectiveId(i), ObjectiveId(j)))
    });
    if unordered_conflict {
        return Ok(ActionRelation::Incomparable);
    }
    let dominates = |wins: &[usize], losses: &[usize]| {
        wins.iter().any(|&j| {
            losses
                .iter()
                .all(|&i| g.precedes(ObjectiveId(j), ObjectiveId(i)))
        })
    };
    Ok(if dominates(&a_wins, &b_wins) {
        ActionRelation::Dominates
    } else if dominates(&b_wins, &a_wins) {
        ActionRelation::DominatedBy
    } else {
        ActionRelation::Indifferent
    })
}

/// Survivor sets obtained by running the preorder filter with exact reward
/// comparisons (difference threshold 0) at every objective.
///
/// Quadratic in the number of actions and written with explicit pair sets;
/// intended as a reference for tests.
pub fn oracle_survivors<T: Scalar>(
    g: &PreorderGraph,
    rewards: &[RewardVector<T>],
) -> Result<Vec<BTreeSet<usize>>> {
    let n = g.n_objectives();
    if rewards.is_empty() {
        return Err(Error::EmptySet);
    }
    for r in rewards {
        if r.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: r.len(),
            });
        }
    }
    let actions: BTreeSet<usize> = (0..rewards.len()).collect();
    // (a, b) in dom[r] means a dominates b at objective r.
    let mut dom: Vec<BTreeSet<(usize, usize)>> = vec![BTreeSet::new(); n];
    let mut dom_by: Vec<BTreeSet<(usize, usize)>> = vec![BTreeSet::new(); n];
    let mut survivors: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];

    for r in g.topological_sort().into_iter().map(ObjectiveId::index) {
        let parents = g.parent_indices(r);
        let inherited_set = if parents.is_empty() {
            actions.clone()
        } else {
            aggregate(parents.iter().map(|&p| &survivors[p]))
        };
        let inherited_dom: BTreeSet<_> = parents.iter().flat_map(|&p| dom[p].iter().copied()).collect();
        let inherited_by: BTreeSet<_> = parents
            .iter()
            .flat_map(|&p| dom_by[p].iter().copied())
            .collect();

        let mut d = inherited_dom.clone();
        let mut db = inherited_by.clone();
        for &a in &actions {
            for &b in &actions {
                if a == b || inherited_dom.contains(&(a, b)) || inherited_by.contains(&(a, b)) {
                    continue;
                }
                let (va, vb) = (rewards[a].0[r], rewards[b].0[r]);
                if va > vb {
                    d.insert((a, b));
                } else if vb > va {
                    db.insert((a, b));
                }
            }
        }
        let conflicts: BTreeSet<_> = d.intersection(&db).copied().collect();
        let mut s: BTreeSet<usize> = inherited_set
            .iter()
            .copied()
            .filter(|&a| {
                !inherited_set
                    .iter()
                    .any(|&b| db.contains(&(a, b)) && !conflicts.contains(&(a, b)))
            })
            .collect();
        if s.is_empty() {
            let best = inherited_set
                .iter()
                .map(|&a| rewards[a].0[r])
                .fold(T::neg_infinity(), T::max);
            s = inherited_set
                .iter()
                .copied()
                .filter(|&a| rewards[a].0[r] == best)
                .collect();
        }
        dom[r] = d;
        dom_by[r] = db;
        survivors[r] = s;
    }
    Ok(survivors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ActionRelation::*;

    fn rv(v: &[f64]) -> RewardVector<f64> {
        RewardVector(v.to_vec())
    }

    fn set(v: &[usize]) -> BTreeSet<usize> {
        v.iter().copied().collect()
    }

    #[test]
    fn higher_priority_gain_outranks_lower_loss() {
        let g = PreorderGraph::new(2, &[(0, 1)]).unwrap();
        assert_eq!(relate(&g, &rv(&[1.0, 0.0]), &rv(&[0.0, 5.0])).unwrap(), Dominates);
        assert_eq!(relate(&g, &rv(&[0.0, 5.0]), &rv(&[1.0, 0.0])).unwrap(), DominatedBy);
    }

    #[test]
    fn equal_vectors_are_indifferent() {
        let g = PreorderGraph::new(3, &[(0, 1)]).unwrap();
        let v = rv(&[0.3, -1.0, 2.0]);
        assert_eq!(relate(&g, &v, &v).unwrap(), Indifferent);
    }

    #[test]
    fn siblings_conflict_is_incomparable() {
        let g = PreorderGraph::new(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
        let a = rv(&[0.0, 1.0, 0.0, 0.0]);
        let b = rv(&[0.0, 0.0, 1.0, 0.0]);
        assert_eq!(relate(&g, &a, &b).unwrap(), Incomparable);
        assert_eq!(relate(&g, &b, &a).unwrap(), Incomparable);
    }

    #[test]
    fn unordered_loss_blocks_dominance() {
        // 0 ≻ 1, objective 2 unordered. a wins on 0 and 2, b wins on 1: dominance
        // via 0 holds, but 2 vs 1 is an unordered conflict.
        let g = PreorderGraph::new(3, &[(0, 1)]).unwrap();
        let a = rv(&[1.0, 0.0, 1.0]);
        let b = rv(&[0.0, 1.0, 0.0]);
        assert_eq!(relate(&g, &a, &b).unwrap(), Incomparable);
        // Without the objective-2 win, plain dominance.
        let a = rv(&[1.0, 0.0, 0.0]);
        assert_eq!(relate(&g, &a, &b).unwrap(), Dominates);
    }

    #[test]
    fn dominance_through_transitive_closure() {
        let g = PreorderGraph::new(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
        let a = rv(&[1.0, 0.0, 0.0, -9.0]);
        let b = rv(&[0.0, 0.0, 0.0, 9.0]);
        assert_eq!(relate(&g, &a, &b).unwrap(), Dominates);
    }

    #[test]
    fn length_mismatch() {
        let g = PreorderGraph::new(2, &[]).unwrap();
        assert!(matches!(
            relate(&g, &rv(&[1.0]), &rv(&[1.0, 2.0])),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(oracle_survivors(&g, &[rv(&[1.0])]).is_err());
        assert!(oracle_survivors::<f64>(&g, &[]).is_err());
    }

    #[test]
    fn oracle_single_objective_is_argmax() {
        let g = PreorderGraph::new(1, &[]).unwrap();
        let s = oracle_survivors(&g, &[rv(&[3.0]), rv(&[1.0]), rv(&[3.0])]).unwrap();
        assert_eq!(s, vec![set(&[0, 2])]);
    }

    #[test]
    fn oracle_chain_trace() {
        let g = PreorderGraph::new(2, &[(0, 1)]).unwrap();
        let s = oracle_survivors(&g, &[rv(&[1.0, 0.0]), rv(&[1.0, 9.0]), rv(&[0.0, 99.0])]).unwrap();
        assert_eq!(s, vec![set(&[0, 1]), set(&[1])]);
    }

    #[test]
    fn oracle_unordered_roots_filter_independently() {
        // Each root runs its own comparison: the pair is split per objective.
        // The combined leaf set (see `global_leaf_survivors`) keeps both actions.
        let g = PreorderGraph::new(2, &[]).unwrap();
        let s = oracle_survivors(&g, &[rv(&[1.0, 0.0]), rv(&[0.0, 1.0])]).unwrap();
        assert_eq!(s, vec![set(&[0]), set(&[1])]);
        assert_eq!(aggregate(s.iter()), set(&[0, 1]));
    }

    #[test]
    fn oracle_conflicting_parents_keep_both() {
        let g = PreorderGraph::new(3, &[(0, 2), (1, 2)]).unwrap();
        let s = oracle_survivors(&g, &[rv(&[1.0, 0.0, 0.0]), rv(&[0.0, 1.0, 0.0])]).unwrap();
        assert_eq!(s[2], set(&[0, 1]));
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn dag_and_vectors() -> impl Strategy<Value = (PreorderGraph, Vec<f64>, Vec<f64>)> {
        (1usize..6).prop_flat_map(|n| {
            let m = n * (n - 1) / 2;
            (
                proptest::collection::vec(any::<bool>(), m),
                proptest::collection::vec(-2i32..3, n),
                proptest::collection::vec(-2i32..3, n),
            )
                .prop_map(move |(keep, a, b)| {
                    let pairs = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j)));
                    let edges: Vec<_> = pairs.zip(keep).filter(|(_, k)| *k).map(|(p, _)| p).collect();
                    let g = PreorderGraph::new(n, &edges).unwrap();
                    let f = |v: Vec<i32>| v.into_iter().map(f64::from).collect();
                    (g, f(a), f(b))
                })
        })
    }

    proptest! {
        #[test]
        fn relation_is_antisymmetric((g, a, b) in dag_and_vectors()) {
            let (a, b) = (RewardVector(a), RewardVector(b));
            let ab = relate(&g, &a, &b).unwrap();
            let ba = relate(&g, &b, &a).unwrap();
            prop_assert_eq!(ab.reversed(), ba);
        }

        #[test]
        fn oracle_never_empty((g, a, b) in dag_and_vectors(), c in proptest::collection::vec(-2i32..3, 5)) {
            let n = g.n_objectives();
            let c: Vec<f64> = c.into_iter().take(n).map(f64::from).collect();
            let s = oracle_survivors(&g, &[RewardVector(a), RewardVector(b), RewardVector(c)]).unwrap();
            prop_assert!(s.iter().all(|x| !x.is_empty()));
        }

        #[test]
        fn single_objective_is_scalar_comparison(x in -5.0f64..5.0, y in -5.0f64..5.0) {
            let g = PreorderGraph::new(1, &[]).unwrap();
            let got = relate(&g, &RewardVector(vec![x]), &RewardVector(vec![y])).unwrap();
            let want = if x > y { ActionRelation::Dominates } else if x < y { ActionRelation::DominatedBy } else { ActionRelation::Indifferent };
            prop_assert_eq!(got, want);
        }
    }
}
