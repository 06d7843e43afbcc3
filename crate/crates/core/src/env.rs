//! Small vector-reward environments with discrete states.
//!
//! Each environment is a pure function of `(state, action, rng)`: the state
//! id encodes everything needed to continue, so one spec can be shared by
//! any number of concurrent runs.
//!
//! * `ConflictBandit`: one state, arms SAFE and RISKY, objectives
//!   safety ≻ progress. SAFE pays `(0, 0.5)`; RISKY pays progress `1.0` and
//!   safety `-1` with probability `0.2`. With weights `(1, 1)` the expected
//!   scalarized values are 0.5 and 0.8, so a weighted sum prefers RISKY while
//!   the precedence prefers SAFE.
//! * `ChainMDP`: `length` states; action 0 advances, action 1 stays. Leaving
//!   the last state pays `1` on every objective and ends the episode, so the
//!   optimal start-state return is `γ^(length-1)`.
//! * `CrossingGrid`: an ego vehicle crosses traffic lanes on a
//!   `width × height` grid. Objectives follow the chain
//!   safety ≻ risk ≻ lane keeping ≻ progress ≻ comfort.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepInfo {
    pub collision: bool,
    pub offroad: bool,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub next_state: usize,
    pub rewards: Vec<f64>,
    pub terminal: bool,
    pub info: StepInfo,
    /// Fraction of the route completed after this step, in `[0, 1]`.
    pub progress: f64,
}

/// NPC load of the crossing grid; the number of active traffic lanes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Density {
    Low,
    Mid,
    #[default]
    High,
}

impl Density {
    /// Share of the maximum number of actors that is active.
    pub fn ratio(self) -> f64 {
        match self {
            Self::Low => 0.5,
            Self::Mid => 0.75,
            Self::High => 1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Low => "low",
            Self::Mid => "mid",
            Self::High => "high",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BanditParams {
    pub safe_progress: f64,
    pub risky_progress: f64,
    pub crash_probability: f64,
    pub crash_penalty: f64,
}

impl Default for BanditParams {
    fn default() -> Self {
        Self {
            safe_progress: 0.5,
            risky_progress: 1.0,
            crash_probability: 0.2,
            crash_penalty: -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainParams {
    pub length: usize,
    pub n_objectives: usize,
    pub goal_reward: f64,
    pub episode_cap: usize,
}

impl Default for ChainParams {
    fn default() -> Self {
        Self {
            length: 4,
            n_objectives: 1,
            goal_reward: 1.0,
            episode_cap: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridParams {
    pub width: usize,
    /// Rows `0..height`; reaching row `height - 1` completes the route.
    pub height: usize,
    /// Rows carrying one NPC each, in activation order (low density uses the
    /// first lanes only).
    pub lane_rows: Vec<usize>,
    /// Inclusive column band the ego is expected to stay in.
    pub lane_band: (usize, usize),
    /// Per-step probability that an NPC advances one column.
    pub npc_move_probability: f64,
    pub density: Density,
    pub episode_cap: usize,
    pub collision_penalty: f64,
    pub risk_penalty: f64,
    pub lane_penalty: f64,
    pub progress_per_row: f64,
    pub goal_bonus: f64,
    pub comfort_penalty: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        Self {
            width: 4,
            height: 5,
            lane_rows: vec![1, 2, 3],
            lane_band: (2, 2),
            npc_move_probability: 0.5,
            density: Density::High,
            episode_cap: 30,
            collision_penalty: -1.0,
            risk_penalty: -0.2,
            lane_penalty: -0.1,
            progress_per_row: 0.1,
            goal_bonus: 0.3,
            comfort_penalty: -0.05,
        }
    }
}

impl GridParams {
    /// Lanes carrying traffic: `⌊ratio · lanes⌋`, at least one.
    pub fn active_lanes(&self) -> usize {
        let n = self.lane_rows.len();
        ((self.density.ratio() * n as f64).floor() as usize).clamp(1.min(n), n)
    }
}

/// Environment declaration as it appears in run configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name")]
pub enum EnvSpec {
    ConflictBandit(BanditParams),
    #[serde(rename = "ChainMDP")]
    Chain(ChainParams),
    CrossingGrid(GridParams),
}

impl EnvSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::ConflictBandit(_) => "ConflictBandit",
            Self::Chain(_) => "ChainMDP",
            Self::CrossingGrid(_) => "CrossingGrid",
        }
    }

    pub fn build(&self) -> Result<Env> {
        match self {
            Self::ConflictBandit(p) => {
                if !(0.0..=1.0).contains(&p.crash_probability) {
                    return Err(Error::Config("crash_probability must lie in [0, 1]".into()));
                }
                Ok(Env::Bandit(p.clone()))
            }
            Self::Chain(p) => {
                if p.length == 0 || p.n_objectives == 0 || p.episode_cap == 0 {
                    return Err(Error::Config(
                        "chain length, n_objectives and episode_cap must be >= 1".into(),
                    ));
                }
                Ok(Env::Chain(p.clone()))
            }
            Self::CrossingGrid(p) => Grid::new(p.clone()).map(Env::Grid),
        }
    }
}

/// Instantiated environment.
#[derive(Debug, Clone)]
pub enum Env {
    Bandit(BanditParams),
    Chain(ChainParams),
    Grid(Grid),
}

pub const SAFE_ARM: usize = 0;
pub const RISKY_ARM: usize = 1;

impl Env {
    pub fn n_states(&self) -> usize {
        match self {
            Self::Bandit(_) => 1,
            Self::Chain(p) => p.length,
            Self::Grid(g) => g.n_states,
        }
    }

    pub fn n_actions(&self) -> usize {
        match self {
            Self::Bandit(_) | Self::Chain(_) => 2,
            Self::Grid(_) => GridAction::ALL.len(),
        }
    }

    pub fn n_objectives(&self) -> usize {
        match self {
            Self::Bandit(_) => 2,
            Self::Chain(p) => p.n_objectives,
            Self::Grid(_) => 5,
        }
    }

    pub fn objective_names(&self) -> Vec<String> {
        match self {
            Self::Bandit(_) => vec!["safety".into(), "progress".into()],
            Self::Chain(p) => (0..p.n_objectives).map(|i| format!("goal{i}")).collect(),
            Self::Grid(_) => ["safety", "risk", "lane", "progress", "comfort"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }

    pub fn episode_cap(&self) -> usize {
        match self {
            Self::Bandit(_) => 1,
            Self::Chain(p) => p.episode_cap,
            Self::Grid(g) => g.params.episode_cap,
        }
    }

    pub fn reset<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match self {
            Self::Bandit(_) | Self::Chain(_) => 0,
            Self::Grid(g) => g.reset(rng),
        }
    }

    pub fn step<R: Rng + ?Sized>(&self, state: usize, action: usize, rng: &mut R) -> Result<StepResult> {
        if action >= self.n_actions() {
            return Err(Error::InvalidAction {
                action,
                n_actions: self.n_actions(),
            });
        }
        if state >= self.n_states() {
            return Err(Error::Index {
                what: "state",
                index: state,
                limit: self.n_states(),
            });
        }
        Ok(match self {
            Self::Bandit(p) => bandit_step(p, action, rng),
            Self::Chain(p) => chain_step(p, state, action),
            Self::Grid(g) => g.step(state, action, rng),
        })
    }
}

fn bandit_step<R: Rng + ?Sized>(p: &BanditParams, action: usize, rng: &mut R) -> StepResult {
    let (rewards, crash) = if action == SAFE_ARM {
        (vec![0.0, p.safe_progress], false)
    } else {
        let crash = rng.random::<f64>() < p.crash_probability;
        let safety = if crash { p.crash_penalty } else { 0.0 };
        (vec![safety, p.risky_progress], crash)
    };
    StepResult {
        next_state: 0,
        rewards,
        terminal: true,
        info: StepInfo {
            collision: crash,
            offroad: false,
            success: !crash,
        },
        progress: 1.0,
    }
}

fn chain_step(p: &ChainParams, state: usize, action: usize) -> StepResult {
    let n = p.n_objectives;
    if action == 1 {
        return StepResult {
            next_state: state,
            rewards: vec![0.0; n],
            terminal: false,
            info: StepInfo::default(),
            progress: state as f64 / p.length as f64,
        };
    }
    let done = state + 1 == p.length;
    StepResult {
        next_state: if done { state } else { state + 1 },
        rewards: vec![if done { p.goal_reward } else { 0.0 }; n],
        terminal: done,
        info: StepInfo {
            success: done,
            ..StepInfo::default()
        },
        progress: (state + 1) as f64 / p.length as f64,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridAction {
    Stay,
    Slow,
    Fast,
    Left,
    Right,
}

impl GridAction {
    pub const ALL: [GridAction; 5] = [Self::Stay, Self::Slow, Self::Fast, Self::Left, Self::Right];

    fn speed(self) -> usize {
        match self {
            Self::Slow => 1,
            Self::Fast => 2,
            _ => 0,
        }
    }
}

/// Decoded crossing-grid state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridState {
    pub x: usize,
    pub y: usize,
    pub speed: usize,
    /// Column of the NPC on each active lane.
    pub npcs: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Grid {
    params: GridParams,
    lanes: usize,
    n_states: usize,
}

impl Grid {
    pub fn new(params: GridParams) -> Result<Self> {
        let p = &params;
        if p.width < 1 || p.height < 2 || p.episode_cap < 1 {
            return Err(Error::Config("grid needs width >= 1, height >= 2, episode_cap >= 1".into()));
        }
        if p.lane_band.0 > p.lane_band.1 || p.lane_band.1 >= p.width {
            return Err(Error::Config("lane_band must be an ordered column range inside the grid".into()));
        }
        if p.lane_rows.iter().any(|&r| r == 0 || r + 1 >= p.height) {
            return Err(Error::Config("lane rows must lie strictly between start and goal rows".into()));
        }
        if !(0.0..=1.0).contains(&p.npc_move_probability) {
            return Err(Error::Config("npc_move_probability must lie in [0, 1]".into()));
        }
        let lanes = params.active_lanes();
        let n_states = p.width * (p.height - 1) * 3 * p.width.pow(lanes as u32);
        Ok(Self {
            params,
            lanes,
            n_states,
        })
    }

    pub fn params(&self) -> &GridParams {
        &self.params
    }

    pub fn encode(&self, s: &GridState) -> usize {
        let w = self.params.width;
        let mut id = 0;
        for &c in s.npcs.iter().rev() {
            id = id * w + c;
        }
        ((id * 3 + s.speed) * (self.params.height - 1) + s.y) * w + s.x
    }

    pub fn decode(&self, mut id: usize) -> GridState {
        let w = self.params.width;
        let x = id % w;
        id /= w;
        let y = id % (self.params.height - 1);
        id /= self.params.height - 1;
        let speed = id % 3;
        id /= 3;
        let npcs = (0..self.lanes)
            .map(|_| {
                let c = id % w;
                id /= w;
                c
            })
            .collect();
        GridState { x, y, speed, npcs }
    }

    fn reset<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let s = GridState {
            x: self.params.lane_band.0 + (self.params.lane_band.1 - self.params.lane_band.0) / 2,
            y: 0,
            speed: 0,
            npcs: (0..self.lanes)
                .map(|_| rng.random_range(0..self.params.width))
                .collect(),
        };
        self.encode(&s)
    }

    fn npc_at(&self, npcs: &[usize], row: usize, col: usize) -> bool {
        self.params.lane_rows[..self.lanes]
            .iter()
            .zip(npcs)
            .any(|(&r, &c)| r == row && c == col)
    }

    fn step<R: Rng + ?Sized>(&self, state: usize, action: usize, rng: &mut R) -> StepResult {
        let p = &self.params;
        let s = self.decode(state);
        let act = GridAction::ALL[action];
        let w = p.width;

        let moved: Vec<usize> = s
            .npcs
            .iter()
            .map(|&c| {
                if rng.random::<f64>() < p.npc_move_probability {
                    (c + 1) % w
                } else {
                    c
                }
            })
            .collect();

        let mut rewards = vec![0.0; 5];
        let speed = act.speed();
        if speed != s.speed {
            rewards[4] = p.comfort_penalty;
        }

        let nx = match act {
            GridAction::Left => s.x.checked_sub(1),
            GridAction::Right => Some(s.x + 1).filter(|&x| x < w),
            _ => Some(s.x),
        };
        let Some(nx) = nx else {
            rewards[0] = p.collision_penalty;
            return StepResult {
                next_state: state,
                rewards,
                terminal: true,
                info: StepInfo {
                    offroad: true,
                    ..StepInfo::default()
                },
                progress: s.y as f64 / (p.height - 1) as f64,
            };
        };
        let goal = p.height - 1;
        let ny = (s.y + speed).min(goal);
        let advanced = ny - s.y;
        rewards[3] = p.progress_per_row * advanced as f64;

        // Cells swept this step: every row from y+1 up to ny, or the target cell for lateral moves.
        let swept: Vec<(usize, usize)> = if advanced > 0 {
            (s.y + 1..=ny).map(|row| (row, nx)).collect()
        } else {
            vec![(ny, nx)]
        };
        let collision = swept
            .iter()
            .any(|&(row, col)| self.npc_at(&s.npcs, row, col) || self.npc_at(&moved, row, col));
        let progress = ny as f64 / goal as f64;
        if collision {
            rewards[0] = p.collision_penalty;
            return StepResult {
                next_state: state,
                rewards,
                terminal: true,
                info: StepInfo {
                    collision: true,
                    ..StepInfo::default()
                },
                progress,
            };
        }

        let near = self.params.lane_rows[..self.lanes]
            .iter()
            .zip(&moved)
            .any(|(&row, &col)| row.abs_diff(ny) <= 1 && col.abs_diff(nx) <= 1);
        if near {
            rewards[1] = p.risk_penalty;
        }
        if nx < p.lane_band.0 || nx > p.lane_band.1 {
            rewards[2] = p.lane_penalty;
        }
        let success = ny == goal;
        if success {
            rewards[3] += p.goal_bonus;
        }
        let next = GridState {
            x: nx,
            y: if success { s.y } else { ny },
            speed,
            npcs: moved,
        };
        StepResult {
            next_state: self.encode(&next),
            rewards,
            terminal: success,
            info: StepInfo {
                success,
                ..StepInfo::default()
            },
            progress,
        }
    }

    /// ASCII rendering: `E` ego, `N` NPC, `=` lane row, `|` lane band, `G` goal row.
    pub fn render(&self, state: usize) -> String {
        let s = self.decode(state);
        let p = &self.params;
        let mut out = String::new();
        for row in (0..p.height).rev() {
            let _ = write!(out, "{row:>2} ");
            for col in 0..p.width {
                let ch = if row == s.y && col == s.x {
                    'E'
                } else if self.npc_at(&s.npcs, row, col) {
                    'N'
                } else if row == p.height - 1 {
                    'G'
                } else if p.lane_rows[..self.lanes].contains(&row) {
                    '='
                } else if (p.lane_band.0..=p.lane_band.1).contains(&col) {
                    '|'
                } else {
                    '.'
                };
                out.push(ch);
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn bandit_payoffs() {
        let env = EnvSpec::ConflictBandit(BanditParams::default()).build().unwrap();
        let mut r = rng(0);
        assert_eq!(env.reset(&mut r), 0);
        let safe = env.step(0, SAFE_ARM, &mut r).unwrap();
        assert_eq!(safe.rewards, vec![0.0, 0.5]);
        assert!(safe.terminal && safe.info.success);

        // Expected scalarized values with weights (1, 1): SAFE 0.5, RISKY 0.8.
        let p = BanditParams::default();
        let risky_ev = p.crash_probability * p.crash_penalty + p.risky_progress;
        assert!((risky_ev - 0.8).abs() < 1e-12);
        assert!(risky_ev > p.safe_progress);

        let n = 20_000;
        let crashes = (0..n)
            .filter(|_| env.step(0, RISKY_ARM, &mut r).unwrap().info.collision)
            .count();
        let rate = crashes as f64 / n as f64;
        assert!((rate - 0.2).abs() < 0.02, "{rate}");
        assert!(matches!(env.step(0, 2, &mut r), Err(Error::InvalidAction { .. })));
    }

    #[test]
    fn chain_closed_form_return() {
        let env = EnvSpec::Chain(ChainParams::default()).build().unwrap();
        let mut r = rng(0);
        let mut s = env.reset(&mut r);
        assert_eq!(s, 0);
        let gamma: f64 = 0.9;
        let mut ret = 0.0;
        for t in 0.. {
            let step = env.step(s, 0, &mut r).unwrap();
            ret += gamma.powi(t) * step.rewards[0];
            s = step.next_state;
            if step.terminal {
                assert!(step.info.success && !step.info.collision);
                break;
            }
        }
        assert!((ret - 0.729).abs() < 1e-12);
    }

    fn grid() -> Grid {
        Grid::new(GridParams::default()).unwrap()
    }

    #[test]
    fn grid_encoding_roundtrip() {
        let g = grid();
        for id in (0..g.n_states).step_by(37) {
            assert_eq!(g.encode(&g.decode(id)), id);
        }
        let s = GridState {
            x: 3,
            y: 3,
            speed: 2,
            npcs: vec![3, 3, 3],
        };
        assert_eq!(g.encode(&s), g.n_states - 1);
    }

    #[test]
    fn grid_reset_is_seeded() {
        let env = Env::Grid(grid());
        assert_eq!(env.reset(&mut rng(5)), env.reset(&mut rng(5)));
    }

    #[test]
    fn grid_collision_is_terminal() {
        let g = grid();
        let env = Env::Grid(g.clone());
        // NPC sitting right in front of the ego on lane row 1; it moves away
        // with some probability but the pre-move cell already counts.
        let s = g.encode(&GridState {
            x: 2,
            y: 0,
            speed: 0,
            npcs: vec![2, 0, 0],
        });
        let out = env.step(s, 1, &mut rng(1)).unwrap();
        assert_eq!(out.rewards[0], -1.0);
        assert!(out.terminal && out.info.collision && !out.info.success);
    }

    #[test]
    fn grid_offroad_is_terminal() {
        let g = grid();
        let env = Env::Grid(g.clone());
        let s = g.encode(&GridState {
            x: 0,
            y: 0,
            speed: 0,
            npcs: vec![3, 3, 3],
        });
        let out = env.step(s, 3, &mut rng(1)).unwrap();
        assert_eq!(out.rewards[0], -1.0);
        assert!(out.terminal && out.info.offroad);
    }

    #[test]
    fn grid_goal_and_shaping() {
        let g = grid();
        let env = Env::Grid(g.clone());
        // one row below the goal; a fast move is clamped at the goal row
        let s = g.encode(&GridState {
            x: 2,
            y: 3,
            speed: 1,
            npcs: vec![0, 0, 0],
        });
        let out = env.step(s, 2, &mut rng(3)).unwrap();
        assert!(out.terminal && out.info.success);
        assert!((out.rewards[3] - 0.4).abs() < 1e-12);
        assert_eq!(out.rewards[4], -0.05);
        assert_eq!(out.progress, 1.0);
    }

    #[test]
    fn grid_episode_respects_cap_and_flags() {
        let env = Env::Grid(grid());
        let mut r = rng(9);
        for _ in 0..50 {
            let mut s = env.reset(&mut r);
            let mut steps = 0;
            loop {
                let a = r.random_range(0..env.n_actions());
                let out = env.step(s, a, &mut r).unwrap();
                assert_eq!(out.rewards.len(), 5);
                assert!(!(out.info.success && out.info.collision));
                steps += 1;
                s = out.next_state;
                if out.terminal || steps == env.episode_cap() {
                    break;
                }
            }
            assert!(steps <= env.episode_cap());
        }
    }

    #[test]
    fn density_controls_lanes() {
        let mut p = GridParams::default();
        p.density = Density::Low;
        assert_eq!(p.active_lanes(), 1);
        p.density = Density::Mid;
        assert_eq!(p.active_lanes(), 2);
        p.density = Density::High;
        assert_eq!(p.active_lanes(), 3);
    }

    #[test]
    fn render_marks_ego_and_npcs() {
        let g = grid();
        let s = g.encode(&GridState {
            x: 2,
            y: 0,
            speed: 0,
            npcs: vec![0, 1, 3],
        });
        let txt = g.render(s);
        assert_eq!(txt.matches('E').count(), 1);
        assert_eq!(txt.matches('N').count(), 3);
    }
}
