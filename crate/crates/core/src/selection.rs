//! Preorder action selection.
//!
//! Objectives are visited in topological order. Each objective inherits the
//! dominance bits of its parents (element-wise OR) and the aggregate of their
//! survivor sets, lets the comparator decide only the pairs no parent has
//! decided, merges both, drops pairs that are dominated in both directions
//! (conflicts between unordered parents), and keeps the inherited actions that
//! no inherited action dominates.
//!
//! Aggregation of parent survivor sets is their intersection, or their union
//! when the intersection is empty. If the final filter would leave nothing,
//! the inherited actions with the best comparator score are kept and the
//! event is counted in [`SelectionState::fallbacks`].

use std::collections::BTreeSet;

use rand::Rng;

use crate::comparators::{classify_pairs, scores, ComparatorConfig, QuantileMatrix};
use crate::error::{Error, Result};
use crate::matrix::BoolMatrix;
use crate::preorder::{ObjectiveId, PreorderGraph};
use crate::scalar::Scalar;

pub type ActionSet = BTreeSet<usize>;

/// Output of [`select`], indexed by objective.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionState {
    pub dom: Vec<BoolMatrix>,
    pub dom_by: Vec<BoolMatrix>,
    pub survivors: Vec<ActionSet>,
    /// Objectives at which the non-emptiness fallback fired.
    pub fallbacks: Vec<ObjectiveId>,
}

impl SelectionState {
    pub fn survivors_of(&self, r: ObjectiveId) -> &ActionSet {
        &self.survivors[r.index()]
    }
}

/// Intersection of the given sets, or their union if the intersection is empty.
pub fn aggregate<'a, I>(sets: I) -> ActionSet
where
    I: IntoIterator<Item = &'a ActionSet>,
{
    let sets: Vec<&ActionSet> = sets.into_iter().collect();
    let Some((first, rest)) = sets.split_first() else {
        return ActionSet::new();
    };
    let inter: ActionSet = first
        .iter()
        .copied()
        .filter(|a| rest.iter().all(|s| s.contains(a)))
        .collect();
    if !inter.is_empty() {
        return inter;
    }
    sets.iter().flat_map(|s| s.iter().copied()).collect()
}

/// Runs the preorder filter on one state's per-objective quantile matrices.
pub fn select<T: Scalar>(
    g: &PreorderGraph,
    quantiles: &[QuantileMatrix<T>],
    cfgs: &[ComparatorConfig<T>],
) -> Result<SelectionState> {
    let n = g.n_objectives();
    if quantiles.len() != n || cfgs.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "preorder has {n} objectives, got {} quantile matrices and {} comparator configs",
            quantiles.len(),
            cfgs.len()
        )));
    }
    let n_actions = quantiles[0].n_actions();
    if let Some(bad) = quantiles.iter().position(|q| q.n_actions() != n_actions) {
        return Err(Error::ShapeMismatch(format!(
            "objective {bad} has {} actions, objective 0 has {n_actions}",
            quantiles[bad].n_actions()
        )));
    }

    let all: ActionSet = (0..n_actions).collect();
    let mut dom = vec![BoolMatrix::zeros(n_actions); n];
    let mut dom_by = vec![BoolMatrix::zeros(n_actions); n];
    let mut survivors = vec![ActionSet::new(); n];
    let mut fallbacks = Vec::new();

    for &r in g.order_indices() {
        let parents = g.parent_indices(r);
        let (inherited, dom_up, by_up) = if parents.is_empty() {
            (
                all.clone(),
                BoolMatrix::zeros(n_actions),
                BoolMatrix::zeros(n_actions),
            )
        } else {
            let fold = |ms: &[BoolMatrix]| {
                parents
                    .iter()
                    .fold(BoolMatrix::zeros(n_actions), |acc, &p| acc.or(&ms[p]))
            };
            (
                aggregate(parents.iter().map(|&p| &survivors[p])),
                fold(&dom),
                fold(&dom_by),
            )
        };

        let mask = dom_up.or(&by_up).not();
        let local = classify_pairs(&quantiles[r], &cfgs[r], &mask)?;
        let merged_dom = dom_up.and_not(&mask).or(&local.dom.and(&mask));
        let merged_by = by_up.and_not(&mask).or(&local.dom_by.and(&mask));

        let conflict = merged_dom.and(&merged_by);
        let by_down = merged_by.and_not(&conflict);
        let mut kept: ActionSet = inherited
            .iter()
            .copied()
            .filter(|&a| !inherited.iter().any(|&b| by_down.get(a, b)))
            .collect();
        if kept.is_empty() {
            let s = scores(&quantiles[r], &cfgs[r])?;
            let best = inherited
                .iter()
                .map(|&a| s[a])
                .fold(T::neg_infinity(), T::max);
            kept = inherited.iter().copied().filter(|&a| s[a] == best).collect();
            fallbacks.push(ObjectiveId(r));
        }

        dom[r] = merged_dom;
        dom_by[r] = merged_by;
        survivors[r] = kept;
    }

    Ok(SelectionState {
        dom,
        dom_by,
        survivors,
        fallbacks,
    })
}

/// Survivors of the single leaf, or the aggregate over several leaves.
pub fn global_leaf_survivors(state: &SelectionState, g: &PreorderGraph) -> ActionSet {
    aggregate(g.leaves().into_iter().map(|r| &state.survivors[r.index()]))
}

/// Uniform draw from `survivors`.
pub fn sample_action<R: Rng + ?Sized>(survivors: &ActionSet, rng: &mut R) -> Result<usize> {
    if survivors.is_empty() {
        return Err(Error::EmptySet);
    }
    let i = rng.random_range(0..survivors.len());
    Ok(*survivors.iter().nth(i).expect("index within set"))
}
