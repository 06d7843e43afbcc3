//! Preorder-guided multi-objective distributional reinforcement learning.
//!
//! Objectives are partially ordered by a DAG. At each state every objective
//! holds a quantile estimate of the return of each action; the selection
//! filter walks the DAG in topological order, prunes actions that lose a
//! pairwise quantile comparison at a higher objective, and hands the
//! survivors down to the next level. A tabular quantile-TD learner
//! bootstraps from the surviving actions only.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the common `f64` instantiation.

pub mod comparators;
pub mod env;
pub mod error;
pub mod learner;
pub mod matrix;
pub mod preorder;
pub mod relations;
pub mod scalar;
pub mod selection;
pub mod stats;

pub use comparators::{
    classify_pairs, ideal_profile, qd, scores, w1_to_ideal, zscore_normalize, ComparatorConfig,
    ComparatorKind, PairwiseDecision, QuantileMatrix,
};
pub use env::{Density, Env, EnvSpec, StepInfo, StepResult};
pub use error::{Error, Result};
pub use learner::{
    act, greedy_target_action, td_update, train, EpisodeRecord, Exploration, LearnerConfig,
    LearnerMode, QuantileTensor, TrainOutput, VectorTransition,
};
pub use matrix::{ActionMatrix, BoolMatrix};
pub use preorder::{ObjectiveId, PreorderGraph, PreorderSpec};
pub use relations::{oracle_survivors, relate, ActionRelation, RewardVector};
pub use scalar::Scalar;
pub use selection::{aggregate, global_leaf_survivors, sample_action, select, ActionSet, SelectionState};

pub type QuantileMatrix64 = QuantileMatrix<f64>;
pub type QuantileMatrix32 = QuantileMatrix<f32>;
pub type ComparatorConfig64 = ComparatorConfig<f64>;
pub type LearnerConfig64 = LearnerConfig<f64>;
pub type QuantileTensor64 = QuantileTensor<f64>;
pub type RewardVector64 = RewardVector<f64>;
pub type VectorTransition64 = VectorTransition<f64>;
