//! Run configuration: a JSON document with a `schema_version` field.
//!
//! The `grid` is a list of blocks; each block expands to the cartesian
//! product of its axes, and `densities` multiplies every cell again when the
//! environment is a crossing grid.

use std::collections::BTreeSet;
use std::path::Path;

use preorder_rl::env::Density;
use preorder_rl::{
    ComparatorConfig, ComparatorKind, EnvSpec, Exploration, LearnerConfig, LearnerMode, PreorderGraph,
    PreorderSpec,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub env: EnvSpec,
    /// Precedence used by cells with `partial_order = false`.
    pub preorder: PreorderSpec,
    /// Precedence used by cells with `partial_order = true`.
    #[serde(default)]
    pub partial_preorder: Option<PreorderSpec>,
    #[serde(default)]
    pub learner: LearnerSection,
    pub grid: Vec<GridBlock>,
    pub seeds: Vec<u64>,
    pub episodes: usize,
    #[serde(default = "default_eval_runs")]
    pub eval_runs: usize,
    #[serde(default = "default_eval_episodes")]
    pub eval_episodes: usize,
    /// Crossing-grid traffic settings; empty keeps the environment's own.
    #[serde(default)]
    pub densities: Vec<Density>,
}

fn default_eval_runs() -> usize {
    3
}

fn default_eval_episodes() -> usize {
    100
}

/// Learner settings shared by every cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearnerSection {
    /// One discount per objective, or a single value broadcast to all.
    pub gammas: Vec<f64>,
    pub learning_rate: f64,
    pub n_quantiles: usize,
    pub huber_kappa: f64,
    pub exploration: Exploration,
    pub weights: Option<Vec<f64>>,
    pub cvar_alpha: f64,
    pub mv_lambda: f64,
    pub min_spread: f64,
}

impl Default for LearnerSection {
    fn default() -> Self {
        Self {
            gammas: vec![0.9],
            learning_rate: 0.05,
            n_quantiles: 8,
            huber_kappa: 0.0,
            exploration: Exploration {
                start: 1.0,
                end: 0.05,
                decay_episodes: 1000,
            },
            weights: None,
            cvar_alpha: ComparatorConfig::<f64>::DEFAULT_CVAR_ALPHA,
            mv_lambda: ComparatorConfig::<f64>::DEFAULT_MV_LAMBDA,
            min_spread: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    #[serde(default = "default_modes")]
    pub modes: Vec<LearnerMode>,
    #[serde(default = "default_comparators")]
    pub comparators: Vec<ComparatorKind>,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_true")]
    pub training_preorder: Vec<bool>,
    #[serde(default = "default_false")]
    pub partial_order: Vec<bool>,
}

fn default_modes() -> Vec<LearnerMode> {
    vec![LearnerMode::Preorder]
}

fn default_comparators() -> Vec<ComparatorKind> {
    vec![ComparatorKind::QuantileDominance]
}

fn default_epsilons() -> Vec<f64> {
    vec![0.2]
}

fn default_true() -> Vec<bool> {
    vec![true]
}

fn default_false() -> Vec<bool> {
    vec![false]
}

/// One trained policy family: everything but the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub mode: LearnerMode,
    /// Preorder-mode settings; `None` for the baselines.
    pub comparator: Option<ComparatorKind>,
    pub epsilon: Option<f64>,
    pub training_preorder: Option<bool>,
    pub partial_order: bool,
    pub density: Option<Density>,
}

impl Cell {
    /// Human-readable row label, e.g. `PrIQN-QD-e0.2-tp1-po0`.
    pub fn label(&self) -> String {
        let mut s = self.mode.label().to_string();
        if let (Some(c), Some(e), Some(tp)) = (self.comparator, self.epsilon, self.training_preorder) {
            s.push_str(&format!("-{}-e{}-tp{}", c.label(), e, tp as u8));
        }
        if self.mode == LearnerMode::Preorder {
            s.push_str(&format!("-po{}", self.partial_order as u8));
        }
        s
    }

    pub fn density_label(&self) -> &'static str {
        self.density.map_or("-", Density::label)
    }
}

/// Fully resolved cell: concrete environment, precedence and learner config.
#[derive(Debug, Clone)]
pub struct ResolvedCell {
    pub cell: Cell,
    pub env: EnvSpec,
    pub preorder: PreorderSpec,
    pub graph: PreorderGraph,
    pub learner: LearnerConfig<f64>,
    pub hash: String,
}

#[derive(Serialize)]
struct HashInput<'a> {
    schema_version: u32,
    cell: &'a Cell,
    env: &'a EnvSpec,
    preorder: &'a PreorderSpec,
    learner: &'a LearnerSection,
    episodes: usize,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                CliError::Config(format!("{}: no such file", path.display()))
            } else {
                CliError::io(path)(e)
            }
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "schema_version: expected {SCHEMA_VERSION}, got {}",
                self.schema_version
            ));
        }
        if self.seeds.is_empty() {
            return bad("seeds: at least one seed is required".into());
        }
        if self.grid.is_empty() {
            return bad("grid: at least one block is required".into());
        }
        if self.eval_runs == 0 || self.eval_episodes == 0 {
            return bad("eval_runs and eval_episodes must be >= 1".into());
        }
        if !self.densities.is_empty() && !matches!(self.env, EnvSpec::CrossingGrid(_)) {
            return bad("densities: only the CrossingGrid environment has a traffic density".into());
        }
        for (i, b) in self.grid.iter().enumerate() {
            if b.modes.is_empty()
                || b.comparators.is_empty()
                || b.epsilons.is_empty()
                || b.training_preorder.is_empty()
                || b.partial_order.is_empty()
            {
                return bad(format!("grid[{i}]: every axis needs at least one value"));
            }
            if b.partial_order.contains(&true) && self.partial_preorder.is_none() {
                return bad(format!("grid[{i}].partial_order: no partial_preorder declared"));
            }
        }
        let env = self.env.build().map_err(|e| CliError::Config(format!("env: {e}")))?;
        for (name, spec) in [("preorder", Some(&self.preorder)), ("partial_preorder", self.partial_preorder.as_ref())] {
            let Some(spec) = spec else { continue };
            spec.build().map_err(|e| CliError::Config(format!("{name}: {e}")))?;
            if spec.n_objectives != env.n_objectives() {
                return bad(format!(
                    "{name}.n_objectives: environment {} has {} objectives, got {}",
                    self.env.name(),
                    env.n_objectives(),
                    spec.n_objectives
                ));
            }
        }
        // Resolving every cell runs the learner's own checks.
        self.cells()?;
        Ok(())
    }

    /// Expands the grid, dropping duplicates while keeping first-seen order.
    pub fn cells(&self) -> Result<Vec<ResolvedCell>> {
        let densities: Vec<Option<Density>> = if self.densities.is_empty() {
            vec![None]
        } else {
            self.densities.iter().copied().map(Some).collect()
        };
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &density in &densities {
            for b in &self.grid {
                for &mode in &b.modes {
                    for &po in &b.partial_order {
                        let pr = mode == LearnerMode::Preorder;
                        let combos: Vec<(Option<ComparatorKind>, Option<f64>, Option<bool>)> = if pr {
                            let mut v = Vec::new();
                            for &c in &b.comparators {
                                for &e in &b.epsilons {
                                    for &tp in &b.training_preorder {
                                        v.push((Some(c), Some(e), Some(tp)));
                                    }
                                }
                            }
                            v
                        } else {
                            vec![(None, None, None)]
                        };
                        for (comparator, epsilon, training_preorder) in combos {
                            let cell = Cell {
                                mode,
                                comparator,
                                epsilon,
                                training_preorder,
                                // the baselines never look at the precedence
                                partial_order: po && pr,
                                density,
                            };
                            let r = self.resolve(cell)?;
                            if seen.insert(r.hash.clone()) {
                                out.push(r);
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    fn resolve(&self, cell: Cell) -> Result<ResolvedCell> {
        let mut env = self.env.clone();
        if let (EnvSpec::CrossingGrid(p), Some(d)) = (&mut env, cell.density) {
            p.density = d;
        }
        let preorder = if cell.partial_order {
            self.partial_preorder.clone().expect("checked in validate")
        } else {
            self.preorder.clone()
        };
        let graph = preorder.build().map_err(|e| CliError::Config(format!("preorder: {e}")))?;
        let learner = self.learner_config(&cell)?;
        let hash = {
            let input = HashInput {
                schema_version: self.schema_version,
                cell: &cell,
                env: &env,
                preorder: &preorder,
                learner: &self.learner,
                episodes: self.episodes,
            };
            let bytes = serde_json::to_vec(&input).expect("config serializes");
            hex::encode(&Sha256::digest(&bytes)[..6])
        };
        Ok(ResolvedCell {
            cell,
            env,
            preorder,
            graph,
            learner,
            hash,
        })
    }

    fn learner_config(&self, cell: &Cell) -> Result<LearnerConfig<f64>> {
        let l = &self.learner;
        let n = self.preorder.n_objectives;
        let mut cfg = LearnerConfig::new(n, cell.mode);
        cfg.gammas = match l.gammas.len() {
            1 => vec![l.gammas[0]; n],
            _ => l.gammas.clone(),
        };
        cfg.learning_rate = l.learning_rate;
        cfg.n_quantiles = l.n_quantiles;
        cfg.huber_kappa = l.huber_kappa;
        cfg.exploration = l.exploration;
        if let Some(w) = &l.weights {
            cfg.weights = w.clone();
        }
        let eps = cell.epsilon.unwrap_or(0.2);
        let comparator = match cell.comparator.unwrap_or(ComparatorKind::QuantileDominance) {
            ComparatorKind::QuantileDominance => ComparatorConfig::qd(eps),
            ComparatorKind::CVaR => ComparatorConfig::cvar(eps, l.cvar_alpha),
            ComparatorKind::MeanVariance => ComparatorConfig::mean_variance(eps, l.mv_lambda),
        }
        .with_min_spread(l.min_spread);
        cfg.comparators = vec![comparator; n];
        cfg.training_preorder = cell.training_preorder.unwrap_or(true);
        cfg.validate()
            .map_err(|e| CliError::Config(format!("learner ({}): {e}", cell.label())))?;
        Ok(cfg)
    }
}
