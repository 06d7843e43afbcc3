//! Tabular quantile-TD learner whose bootstrap targets respect the survivor
//! sets of the preorder filter, plus weighted-sum and mean-aggregation
//! baselines.
//!
//! Each objective owns a table of `K` return quantiles per `(state, action)`
//! at fixed midpoint fractions `τ_k = (2k-1)/2K`. For a transition
//! `(s, a, r, s')` every objective `i` picks its bootstrap action `a*_i` as the
//! best mean among the survivors of `i` at `s'` (or among all actions when the
//! preorder is not used in training) and moves each quantile by the quantile
//! regression subgradient averaged over all target quantiles.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::comparators::{ComparatorConfig, QuantileMatrix};
use crate::env::Env;
use crate::error::{Error, Result};
use crate::preorder::PreorderGraph;
use crate::relations::RewardVector;
use crate::scalar::{mean, Scalar};
use crate::selection::{global_leaf_survivors, sample_action, select, ActionSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LearnerMode {
    #[serde(rename = "PrIQN")]
    Preorder,
    WeightedSum,
    MeanAggregation,
}

impl LearnerMode {
    pub fn label(self) -> &'static str {
        match self {
            Self::Preorder => "PrIQN",
            Self::WeightedSum => "WeightedSum",
            Self::MeanAggregation => "MeanAggregation",
        }
    }
}

/// Linear ε-greedy decay from `start` to `end` over `decay_episodes`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Exploration {
    pub start: f64,
    pub end: f64,
    pub decay_episodes: usize,
}

impl Exploration {
    pub fn constant(eps: f64) -> Self {
        Self {
            start: eps,
            end: eps,
            decay_episodes: 0,
        }
    }

    pub fn at(&self, episode: usize) -> f64 {
        if self.decay_episodes == 0 || episode >= self.decay_episodes {
            return self.end;
        }
        let frac = episode as f64 / self.decay_episodes as f64;
        self.start + (self.end - self.start) * frac
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig<T> {
    pub n_objectives: usize,
    pub gammas: Vec<T>,
    pub learning_rate: T,
    pub exploration: Exploration,
    pub n_quantiles: usize,
    /// Huber threshold of the quantile loss; zero is the plain pinball loss.
    pub huber_kappa: T,
    pub comparators: Vec<ComparatorConfig<T>>,
    pub training_preorder: bool,
    pub mode: LearnerMode,
    /// Scalarization weights, weighted-sum mode only.
    pub weights: Vec<T>,
}

impl<T: Scalar> LearnerConfig<T> {
    /// Defaults: K = 8, η = 0.05, γ = 0.9, QD with ε = 0.2, pinball loss.
    pub fn new(n_objectives: usize, mode: LearnerMode) -> Self {
        Self {
            n_objectives,
            gammas: vec![T::of(0.9); n_objectives],
            learning_rate: T::of(0.05),
            exploration: Exploration {
                start: 1.0,
                end: 0.05,
                decay_episodes: 1000,
            },
            n_quantiles: 8,
            huber_kappa: T::zero(),
            comparators: vec![ComparatorConfig::qd(T::of(0.2)); n_objectives],
            training_preorder: true,
            mode,
            weights: vec![T::one(); n_objectives],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_objectives;
        if n == 0 {
            return Err(Error::Config("n_objectives must be >= 1".into()));
        }
        if self.gammas.len() != n {
            return Err(Error::Config(format!("gammas: expected {n} entries, got {}", self.gammas.len())));
        }
        if self.gammas.iter().any(|&g| !(g >= T::zero() && g < T::one())) {
            return Err(Error::Config("gammas must lie in [0, 1)".into()));
        }
        if !(self.learning_rate > T::zero()) {
            return Err(Error::Config("learning_rate must be > 0".into()));
        }
        if self.n_quantiles == 0 {
            return Err(Error::Config("n_quantiles must be >= 1".into()));
        }
        if !(self.huber_kappa >= T::zero()) {
            return Err(Error::Config("huber_kappa must be >= 0".into()));
        }
        let e = self.exploration;
        if !(0.0..=1.0).contains(&e.start) || !(0.0..=1.0).contains(&e.end) {
            return Err(Error::Config("exploration rates must lie in [0, 1]".into()));
        }
        if self.comparators.len() != n {
            return Err(Error::Config(format!(
                "comparators: expected {n} entries, got {}",
                self.comparators.len()
            )));
        }
        for c in &self.comparators {
            c.validate()?;
        }
        if self.mode == LearnerMode::WeightedSum {
            if self.weights.len() != n {
                return Err(Error::Config(format!("weights: expected {n} entries, got {}", self.weights.len())));
            }
            if self.weights.iter().any(|w| !w.is_finite()) {
                return Err(Error::Config("weights must be finite".into()));
            }
        }
        Ok(())
    }

    /// Number of value heads the tensor carries.
    pub fn n_heads(&self) -> usize {
        match self.mode {
            LearnerMode::WeightedSum => 1,
            _ => self.n_objectives,
        }
    }
}

/// Experience unit.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorTransition<T> {
    pub state: usize,
    pub action: usize,
    pub rewards: RewardVector<T>,
    pub next_state: usize,
    pub terminal: bool,
}

/// Quantile tables for every head, state and action.
///
/// States are allocated on first write; unwritten entries read as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileTensor<T> {
    n_heads: usize,
    n_states: usize,
    n_actions: usize,
    fractions: Vec<T>,
    /// Per state: `heads × actions × K`, or empty while untouched.
    states: Vec<Vec<T>>,
}

impl<T: Scalar> QuantileTensor<T> {
    pub fn new(n_heads: usize, n_states: usize, n_actions: usize, n_quantiles: usize) -> Self {
        Self {
            n_heads,
            n_states,
            n_actions,
            fractions: QuantileMatrix::midpoint_fractions(n_quantiles),
            states: vec![Vec::new(); n_states],
        }
    }

    pub fn n_heads(&self) -> usize {
        self.n_heads
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_quantiles(&self) -> usize {
        self.fractions.len()
    }

    pub fn fractions(&self) -> &[T] {
        &self.fractions
    }

    fn offset(&self, head: usize, action: usize) -> usize {
        (head * self.n_actions + action) * self.n_quantiles()
    }

    /// Quantile estimates of `(head, state, action)`; `None` when never written.
    pub fn quantiles(&self, head: usize, state: usize, action: usize) -> Option<&[T]> {
        let row = &self.states[state];
        if row.is_empty() {
            return None;
        }
        let o = self.offset(head, action);
        Some(&row[o..o + self.n_quantiles()])
    }

    pub fn quantiles_mut(&mut self, head: usize, state: usize, action: usize) -> &mut [T] {
        let len = self.n_heads * self.n_actions * self.n_quantiles();
        let o = self.offset(head, action);
        let k = self.n_quantiles();
        let row = &mut self.states[state];
        if row.is_empty() {
            *row = vec![T::zero(); len];
        }
        &mut row[o..o + k]
    }

    pub fn value(&self, head: usize, state: usize, action: usize, k: usize) -> T {
        self.quantiles(head, state, action).map_or(T::zero(), |q| q[k])
    }

    pub fn mean_value(&self, head: usize, state: usize, action: usize) -> T {
        self.quantiles(head, state, action).map_or(T::zero(), mean)
    }

    /// `K × A` matrix of one head at one state.
    pub fn matrix(&self, head: usize, state: usize) -> QuantileMatrix<T> {
        let k = self.n_quantiles();
        let mut values = vec![T::zero(); k * self.n_actions];
        if let Some(row) = self.states.get(state).filter(|r| !r.is_empty()) {
            for a in 0..self.n_actions {
                let o = self.offset(head, a);
                for q in 0..k {
                    values[q * self.n_actions + a] = row[o + q];
                }
            }
        }
        QuantileMatrix::from_raw(self.fractions.clone(), self.n_actions, values)
            .expect("tensor entries are finite and fractions valid")
    }

    /// All per-head matrices at `state`.
    pub fn matrices(&self, state: usize) -> Vec<QuantileMatrix<T>> {
        (0..self.n_heads).map(|h| self.matrix(h, state)).collect()
    }

    /// Written states in ascending order.
    pub fn touched_states(&self) -> impl Iterator<Item = usize> + '_ {
        self.states
            .iter()
            .enumerate()
            .filter(|(_, r)| !r.is_empty())
            .map(|(s, _)| s)
    }

    /// Greedy action on the head-`head` mean among `actions`; ties to the lowest index.
    fn argmax_mean(&self, head: usize, state: usize, actions: impl Iterator<Item = usize>) -> Option<usize> {
        let mut best: Option<(usize, T)> = None;
        for a in actions {
            let v = self.mean_value(head, state, a);
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((a, v));
            }
        }
        best.map(|(a, _)| a)
    }

    /// Greedy action on the across-head mean of per-head means.
    fn argmax_joint_mean(&self, state: usize) -> usize {
        let mut best = (0, T::neg_infinity());
        for a in 0..self.n_actions {
            let v = (0..self.n_heads)
                .map(|h| self.mean_value(h, state, a))
                .sum::<T>()
                / T::of_usize(self.n_heads);
            if v > best.1 {
                best = (a, v);
            }
        }
        best.0
    }
}

/// Best mean action of objective `head` at `state` among `survivors`.
pub fn greedy_target_action<T: Scalar>(
    z: &QuantileTensor<T>,
    head: usize,
    state: usize,
    survivors: &ActionSet,
) -> Result<usize> {
    if let Some(&bad) = survivors.iter().find(|&&a| a >= z.n_actions()) {
        return Err(Error::Index {
            what: "action",
            index: bad,
            limit: z.n_actions(),
        });
    }
    z.argmax_mean(head, state, survivors.iter().copied())
        .ok_or(Error::EmptySet)
}

/// Survivor sets at `state`, one per objective.
pub fn survivors_at<T: Scalar>(
    z: &QuantileTensor<T>,
    state: usize,
    cfg: &LearnerConfig<T>,
    g: &PreorderGraph,
) -> Result<Vec<ActionSet>> {
    Ok(select(g, &z.matrices(state), &cfg.comparators)?.survivors)
}

/// Applies one quantile-TD update for transition `t`.
pub fn td_update<T: Scalar>(
    z: &mut QuantileTensor<T>,
    t: &VectorTransition<T>,
    cfg: &LearnerConfig<T>,
    g: &PreorderGraph,
) -> Result<()> {
    let n = cfg.n_objectives;
    if t.rewards.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: t.rewards.len(),
        });
    }
    for (what, idx, limit) in [
        ("state", t.state, z.n_states()),
        ("state", t.next_state, z.n_states()),
        ("action", t.action, z.n_actions()),
    ] {
        if idx >= limit {
            return Err(Error::Index {
                what,
                index: idx,
                limit,
            });
        }
    }
    let all: ActionSet = (0..z.n_actions()).collect();

    // (head, reward, gamma, bootstrap action)
    let heads: Vec<(usize, T, T, usize)> = match cfg.mode {
        LearnerMode::WeightedSum => {
            let r = t
                .rewards
                .0
                .iter()
                .zip(&cfg.weights)
                .map(|(&r, &w)| r * w)
                .sum::<T>();
            let a = greedy_target_action(z, 0, t.next_state, &all)?;
            vec![(0, r, cfg.gammas[0], a)]
        }
        LearnerMode::MeanAggregation => {
            let a = z.argmax_joint_mean(t.next_state);
            (0..n).map(|i| (i, t.rewards.0[i], cfg.gammas[i], a)).collect()
        }
        LearnerMode::Preorder => {
            let survivors = if cfg.training_preorder && !t.terminal {
                survivors_at(z, t.next_state, cfg, g)?
            } else {
                vec![all.clone(); n]
            };
            (0..n)
                .map(|i| {
                    greedy_target_action(z, i, t.next_state, &survivors[i])
                        .map(|a| (i, t.rewards.0[i], cfg.gammas[i], a))
                })
                .collect::<Result<_>>()?
        }
    };

    let k = z.n_quantiles();
    let fractions = z.fractions().to_vec();
    let mut targets = vec![T::zero(); k];
    for (head, reward, gamma, next_action) in heads {
        for (j, y) in targets.iter_mut().enumerate() {
            *y = if t.terminal {
                reward
            } else {
                reward + gamma * z.value(head, t.next_state, next_action, j)
            };
        }
        let theta = z.quantiles_mut(head, t.state, t.action);
        for (q, &tau) in theta.iter_mut().zip(&fractions) {
            let step = targets
                .iter()
                .map(|&y| quantile_gradient(tau, y - *q, cfg.huber_kappa))
                .sum::<T>()
                / T::of_usize(k);
            *q = *q + cfg.learning_rate * step;
        }
    }
    Ok(())
}

/// Descent direction of the (Huber) quantile loss for residual `delta = y - θ`.
fn quantile_gradient<T: Scalar>(tau: T, delta: T, kappa: T) -> T {
    let below = if delta < T::zero() { T::one() } else { T::zero() };
    if kappa == T::zero() {
        return tau - below;
    }
    (tau - below).abs() * delta.max(-kappa).min(kappa) / kappa
}

/// Picks an action at `state`: ε-greedy around the mode's policy.
///
/// The preorder policy samples uniformly from the survivors of the leaf
/// objective (or the aggregate over several leaves).
pub fn act<T: Scalar, R: Rng + ?Sized>(
    z: &QuantileTensor<T>,
    state: usize,
    cfg: &LearnerConfig<T>,
    g: &PreorderGraph,
    exploration: f64,
    rng: &mut R,
) -> Result<usize> {
    if exploration > 0.0 && rng.random::<f64>() < exploration {
        return Ok(rng.random_range(0..z.n_actions()));
    }
    match cfg.mode {
        LearnerMode::WeightedSum => Ok(z
            .argmax_mean(0, state, 0..z.n_actions())
            .expect("at least one action")),
        LearnerMode::MeanAggregation => Ok(z.argmax_joint_mean(state)),
        LearnerMode::Preorder => {
            let st = select(g, &z.matrices(state), &cfg.comparators)?;
            sample_action(&global_leaf_survivors(&st, g), rng)
        }
    }
}

/// Per-episode summary.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub episode: usize,
    /// Undiscounted cumulative reward per objective.
    pub returns: Vec<f64>,
    pub success: bool,
    pub collision: bool,
    pub offroad: bool,
    pub progress: f64,
    pub steps: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutput<T> {
    pub tensor: QuantileTensor<T>,
    pub log: Vec<EpisodeRecord>,
}

/// Runs one episode from a fresh reset, optionally learning from every step.
pub fn run_episode<T: Scalar, R: Rng + ?Sized>(
    env: &Env,
    z: &mut QuantileTensor<T>,
    cfg: &LearnerConfig<T>,
    g: &PreorderGraph,
    exploration: f64,
    learn: bool,
    episode: usize,
    rng: &mut R,
) -> Result<EpisodeRecord> {
    let mut record = EpisodeRecord {
        episode,
        returns: vec![0.0; env.n_objectives()],
        success: false,
        collision: false,
        offroad: false,
        progress: 0.0,
        steps: 0,
    };
    let mut state = env.reset(rng);
    while record.steps < env.episode_cap() {
        let action = act(z, state, cfg, g, exploration, rng)?;
        let out = env.step(state, action, rng)?;
        record.steps += 1;
        for (acc, r) in record.returns.iter_mut().zip(&out.rewards) {
            *acc += r;
        }
        record.progress = out.progress;
        if learn {
            let t = VectorTransition {
                state,
                action,
                rewards: RewardVector(out.rewards.iter().map(|&r| T::of(r)).collect()),
                next_state: out.next_state,
                terminal: out.terminal,
            };
            td_update(z, &t, cfg, g)?;
        }
        if out.terminal {
            record.success = out.info.success;
            record.collision = out.info.collision;
            record.offroad = out.info.offroad;
            break;
        }
        state = out.next_state;
    }
    Ok(record)
}

/// Trains a fresh tensor for `episodes` episodes. Deterministic given `rng`.
pub fn train<T: Scalar, R: Rng + ?Sized>(
    env: &Env,
    cfg: &LearnerConfig<T>,
    g: &PreorderGraph,
    episodes: usize,
    rng: &mut R,
) -> Result<TrainOutput<T>> {
    cfg.validate()?;
    if g.n_objectives() != cfg.n_objectives || env.n_objectives() != cfg.n_objectives {
        return Err(Error::Config(format!(
            "objective counts differ: preorder {}, learner {}, environment {}",
            g.n_objectives(),
            cfg.n_objectives,
            env.n_objectives()
        )));
    }
    let mut z = QuantileTensor::new(cfg.n_heads(), env.n_states(), env.n_actions(), cfg.n_quantiles);
    let mut log = Vec::with_capacity(episodes);
    for ep in 0..episodes {
        let eps = cfg.exploration.at(ep);
        log.push(run_episode(env, &mut z, cfg, g, eps, true, ep, rng)?);
    }
    Ok(TrainOutput { tensor: z, log })
}
