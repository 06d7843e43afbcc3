//! Precedence structure over reward components.
//!
//! A preorder is stored as a DAG of strict-precedence edges `(higher, lower)`:
//! arrows point *down* in priority, so the parents of an objective are the
//! objectives that directly outrank it. Diagrams that draw arrows from the
//! lower objective up to the higher one describe the same graph with the
//! edges flipped.
//!
//! Cycles (equivalence classes) are rejected. Objectives of equal priority
//! are modelled as incomparable siblings.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Position of a reward component in the reward vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ObjectiveId(pub usize);

impl ObjectiveId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Declarative form used in run configs: `{"n_objectives": N, "edges": [[h, l], ...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreorderSpec {
    pub n_objectives: usize,
    #[serde(default)]
    pub edges: Vec<(usize, usize)>,
    /// Optional human-readable labels, one per objective.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub names: Vec<String>,
}

impl PreorderSpec {
    pub fn build(&self) -> Result<PreorderGraph> {
        let mut g = PreorderGraph::new(self.n_objectives, &self.edges)?;
        if !self.names.is_empty() {
            if self.names.len() != self.n_objectives {
                return Err(Error::LengthMismatch {
                    expected: self.n_objectives,
                    got: self.names.len(),
                });
            }
            g.names = self.names.clone();
        }
        Ok(g)
    }

    /// Lexicographic chain `0 ≻ 1 ≻ … ≻ n-1`.
    pub fn chain(n: usize) -> Self {
        Self {
            n_objectives: n,
            edges: (1..n).map(|i| (i - 1, i)).collect(),
            names: Vec::new(),
        }
    }
}

/// Validated, immutable precedence DAG.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreorderGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    order: Vec<usize>,
    /// `closure[h][l]` iff `h` strictly precedes `l` through one or more edges.
    closure: Vec<Vec<bool>>,
    names: Vec<String>,
}

impl PreorderGraph {
    /// Validates `edges` (as `(higher, lower)` pairs) and builds the graph.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("preorder needs at least one objective".into()));
        }
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        let mut seen = BTreeSet::new();
        for &(h, l) in edges {
            for idx in [h, l] {
                if idx >= n {
                    return Err(Error::Index {
                        what: "objective",
                        index: idx,
                        limit: n,
                    });
                }
            }
            if h == l {
                return Err(Error::Cycle(vec![h]));
            }
            if seen.insert((h, l)) {
                parents[l].push(h);
                children[h].push(l);
            }
        }
        for list in parents.iter_mut().chain(children.iter_mut()) {
            list.sort_unstable();
        }
        let order = kahn(n, &parents, &children)?;

        let mut closure = vec![vec![false; n]; n];
        // Reverse topological order: every child's closure row is final before its parents read it.
        for &h in order.iter().rev() {
            for &c in &children[h] {
                closure[h][c] = true;
                let (row_h, row_c) = if h < c {
                    let (lo, hi) = closure.split_at_mut(c);
                    (&mut lo[h], &hi[0])
                } else {
                    let (lo, hi) = closure.split_at_mut(h);
                    (&mut hi[0], &lo[c])
                };
                for (dst, &src) in row_h.iter_mut().zip(row_c.iter()) {
                    *dst |= src;
                }
            }
        }

        Ok(Self {
            n,
            edges: seen.into_iter().collect(),
            parents,
            children,
            order,
            closure,
            names: (0..n).map(|i| format!("r{}", i + 1)).collect(),
        })
    }

    pub fn n_objectives(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn name(&self, r: ObjectiveId) -> &str {
        &self.names[r.0]
    }

    /// Deterministic topological order; ties broken by ascending index.
    pub fn topological_sort(&self) -> Vec<ObjectiveId> {
        self.order.iter().copied().map(ObjectiveId).collect()
    }

    pub(crate) fn order_indices(&self) -> &[usize] {
        &self.order
    }

    /// Direct higher-priority neighbours of `r`.
    pub fn parents(&self, r: ObjectiveId) -> Result<BTreeSet<ObjectiveId>> {
        self.check(r)?;
        Ok(self.parents[r.0].iter().copied().map(ObjectiveId).collect())
    }

    pub(crate) fn parent_indices(&self, r: usize) -> &[usize] {
        &self.parents[r]
    }

    pub fn children(&self, r: ObjectiveId) -> Result<BTreeSet<ObjectiveId>> {
        self.check(r)?;
        Ok(self.children[r.0].iter().copied().map(ObjectiveId).collect())
    }

    /// Objectives that outrank nothing.
    pub fn leaves(&self) -> BTreeSet<ObjectiveId> {
        (0..self.n)
            .filter(|&r| self.children[r].is_empty())
            .map(ObjectiveId)
            .collect()
    }

    /// Strict precedence in the transitive closure: `higher ≻ lower`.
    pub fn precedes(&self, higher: ObjectiveId, lower: ObjectiveId) -> bool {
        higher.0 < self.n && lower.0 < self.n && self.closure[higher.0][lower.0]
    }

    /// Neither objective outranks the other.
    pub fn incomparable(&self, a: ObjectiveId, b: ObjectiveId) -> bool {
        a != b && !self.precedes(a, b) && !self.precedes(b, a)
    }

    fn check(&self, r: ObjectiveId) -> Result<()> {
        if r.0 >= self.n {
            return Err(Error::Index {
                what: "objective",
                index: r.0,
                limit: self.n,
            });
        }
        Ok(())
    }
}

fn kahn(n: usize, parents: &[Vec<usize>], children: &[Vec<usize>]) -> Result<Vec<usize>> {
    let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(next) = ready.pop_first() {
        order.push(next);
        for &c in &children[next] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.insert(c);
            }
        }
    }
    if order.len() < n {
        let stuck = (0..n).filter(|&i| indegree[i] > 0).collect();
        return Err(Error::Cycle(stuck));
    }
    Ok(order)
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn random_dag() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
        (1usize..8).prop_flat_map(|n| {
            let pairs: Vec<(usize, usize)> = (0..n)
                .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
                .collect();
            let m = pairs.len();
            (
                Just(n),
                proptest::collection::vec(any::<bool>(), m),
                Just(pairs),
                // random relabelling so that edges do not always point to higher indices
                Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
            )
                .prop_map(|(n, keep, pairs, perm)| {
                    let edges = pairs
                        .into_iter()
                        .zip(keep)
                        .filter(|(_, k)| *k)
                        .map(|((a, b), _)| (perm[a], perm[b]))
                        .collect();
                    (n, edges)
                })
        })
    }

    proptest! {
        #[test]
        fn sort_respects_every_edge((n, edges) in random_dag()) {
            let g = PreorderGraph::new(n, &edges).unwrap();
            let order = g.topological_sort();
            prop_assert_eq!(order.len(), n);
            let mut seen: Vec<_> = order.iter().map(|o| o.0).collect();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
            let pos = |x: usize| order.iter().position(|o| o.0 == x).unwrap();
            for &(h, l) in &edges {
                prop_assert!(pos(h) < pos(l));
                prop_assert!(g.precedes(ObjectiveId(h), ObjectiveId(l)));
            }
            for r in 0..n {
                let is_leaf = g.leaves().contains(&ObjectiveId(r));
                prop_assert_eq!(is_leaf, !edges.iter().any(|&(h, _)| h == r));
                let parents: BTreeSet<_> = edges.iter().filter(|e| e.1 == r).map(|e| ObjectiveId(e.0)).collect();
                prop_assert_eq!(g.parents(ObjectiveId(r)).unwrap(), parents.clone());
                prop_assert_eq!(g.parents(ObjectiveId(r)).unwrap(), parents);
            }
        }
    }
}
