//! Deterministic gridworld with a safe and a performant controller.
//!
//! The agent moves with king moves (8 directions, bumping into the border
//! leaves it in place). Entering the goal pays a bonus and teleports the agent
//! back to the start, so one episode contains many laps. Cells carry a cost:
//! [`HAZARD_COST`] on a hazard, [`ADJACENT_COST`] on any cell at Chebyshev
//! distance 1 from a hazard.
//!
//! Feedback is `[reward, safety]`, both in `[0, 1]` and maximized:
//! `reward = (progress + goal_bonus) / reward_scale` where progress is the
//! decrease of Chebyshev distance to the goal (clamped at 0), and
//! `safety = 1 − cost / cost_scale`.
//!
//! Arm 0 is the safe controller, arm 1 the performant one. The performant
//! controller follows a shortest path to the goal; the safe one follows a
//! shortest path among those avoiding costly cells, and minimizes the cost
//! it cannot avoid. Each controller's
//! context at a state is built from its one-step action-value tables:
//! `ψ = [w·q̄_reward, w·q̄_safety, b]` with `q̄ = (1 − γ_f)·q`, which keeps
//! `‖ψ‖₂ < 1`.

use alloc::vec;
use alloc::vec::Vec;

use super::{Environment, Transition};
use crate::blender::ArmId;
use crate::error::{Error, Result};

/// Row/column position; row 0 is the top line of a map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    pub fn chebyshev(self, other: Cell) -> usize {
        self.row.abs_diff(other.row).max(self.col.abs_diff(other.col))
    }
}

/// Index into [`MOVES`].
pub type Action = usize;

/// `(Δrow, Δcol)`: N, NE, E, SE, S, SW, W, NW.
pub const MOVES: [(isize, isize); 8] = [(-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1)];
pub const NUM_ACTIONS: usize = MOVES.len();

pub const HAZARD_COST: f64 = 1.0;
pub const ADJACENT_COST: f64 = 0.5;
pub const GOAL_BONUS: f64 = 1.0;
pub const FEATURE_WEIGHT: f64 = 0.7;
pub const FEATURE_BIAS: f64 = 0.1;
/// Value-iteration stopping threshold (sup-norm change per sweep).
pub const VALUE_TOLERANCE: f64 = 1e-9;

pub const SAFE_ARM: ArmId = ArmId(0);
pub const PERFORMANT_ARM: ArmId = ArmId(1);

/// Action-value tables, one row of [`NUM_ACTIONS`] entries per cell.
pub type QTable = Vec<[f64; NUM_ACTIONS]>;

#[derive(Debug, Clone, PartialEq)]
pub struct GridworldEnv {
    width: usize,
    height: usize,
    start: Cell,
    goal: Cell,
    hazards: Vec<Cell>,
    agent: Cell,
    episode_len: usize,
    elapsed: usize,
    reward_scale: f64,
    cost_scale: f64,
    feature_discount: f64,
}

impl GridworldEnv {
    pub fn new(
        width: usize,
        height: usize,
        start: Cell,
        goal: Cell,
        hazards: Vec<Cell>,
        episode_len: usize,
    ) -> Result<Self> {
        let invalid = |field: &'static str, reason: &str| Error::InvalidConfig {
            field,
            reason: reason.into(),
        };
        if width == 0 || height == 0 {
            return Err(invalid("map", "grid must be at least 1x1"));
        }
        let on_grid = |c: Cell| c.row < height && c.col < width;
        if !on_grid(start) {
            return Err(invalid("start", "off the grid"));
        }
        if !on_grid(goal) {
            return Err(invalid("goal", "off the grid"));
        }
        if start == goal {
            return Err(invalid("goal", "coincides with the start cell"));
        }
        if hazards.iter().any(|&h| !on_grid(h)) {
            return Err(invalid("hazards", "hazard off the grid"));
        }
        if hazards.contains(&goal) {
            return Err(invalid("goal", "goal is a hazard"));
        }
        if episode_len == 0 {
            return Err(invalid("episode_len", "must be at least 1"));
        }
        Ok(Self {
            width,
            height,
            start,
            goal,
            hazards,
            agent: start,
            episode_len,
            elapsed: 0,
            reward_scale: 1.0 + GOAL_BONUS,
            cost_scale: HAZARD_COST,
            feature_discount: 0.0,
        })
    }

    /// 7×7 map, start (0,0), goal (6,6), hazards at (3,2) and (3,3).
    pub fn fixture(episode_len: usize) -> Self {
        Self::new(
            7,
            7,
            Cell::new(0, 0),
            Cell::new(6, 6),
            vec![Cell::new(3, 2), Cell::new(3, 3)],
            episode_len,
        )
        .expect("fixture map is valid")
    }

    /// Discount of the action-value tables used as features (`0` gives
    /// one-step values).
    pub fn with_feature_discount(mut self, discount: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&discount) {
            return Err(Error::InvalidConfig {
                field: "feature_discount",
                reason: alloc::format!("must lie in [0, 1), got {discount}"),
            });
        }
        self.feature_discount = discount;
        Ok(self)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn start(&self) -> Cell {
        self.start
    }

    pub fn goal(&self) -> Cell {
        self.goal
    }

    pub fn hazards(&self) -> &[Cell] {
        &self.hazards
    }

    pub fn agent(&self) -> Cell {
        self.agent
    }

    pub fn episode_len(&self) -> usize {
        self.episode_len
    }

    pub fn elapsed(&self) -> usize {
        self.elapsed
    }

    pub fn feature_discount(&self) -> f64 {
        self.feature_discount
    }

    pub fn is_done(&self) -> bool {
        self.elapsed >= self.episode_len
    }

    /// Moves the agent; the episode clock is untouched.
    pub fn place_agent(&mut self, cell: Cell) -> Result<()> {
        if cell.row >= self.height || cell.col >= self.width {
            return Err(Error::InvalidConfig {
                field: "agent",
                reason: "off the grid".into(),
            });
        }
        self.agent = cell;
        Ok(())
    }

    pub fn reset(&mut self) {
        self.agent = self.start;
        self.elapsed = 0;
    }

    pub fn cells(&self) -> usize {
        self.width * self.height
    }

    pub fn index(&self, c: Cell) -> usize {
        c.row * self.width + c.col
    }

    pub fn cell(&self, index: usize) -> Cell {
        Cell::new(index / self.width, index % self.width)
    }

    /// Raw cost of entering `c`.
    pub fn cell_cost(&self, c: Cell) -> f64 {
        let nearest = self.hazards.iter().map(|&h| h.chebyshev(c)).min();
        match nearest {
            Some(0) => HAZARD_COST,
            Some(1) => ADJACENT_COST,
            _ => 0.0,
        }
    }

    fn target(&self, z: Cell, a: Action) -> Cell {
        let (dr, dc) = MOVES[a];
        let row = z.row as isize + dr;
        let col = z.col as isize + dc;
        if row < 0 || col < 0 || row >= self.height as isize || col >= self.width as isize {
            z
        } else {
            Cell::new(row as usize, col as usize)
        }
    }

    /// Next state (after the goal teleport) and normalized `[reward, safety]`.
    pub fn transition(&self, z: Cell, a: Action) -> (Cell, [f64; 2]) {
        let entered = self.target(z, a);
        let before = z.chebyshev(self.goal);
        let after = entered.chebyshev(self.goal);
        let progress = before.saturating_sub(after) as f64;
        let bonus = if entered == self.goal { GOAL_BONUS } else { 0.0 };
        let reward = (progress + bonus) / self.reward_scale;
        let safety = 1.0 - self.cell_cost(entered) / self.cost_scale;
        let next = if entered == self.goal { self.start } else { entered };
        (next, [reward, safety])
    }

    /// Cost weight that makes the safe controller prefer any cost-free path
    /// over every path touching a costly cell.
    pub fn safety_penalty(&self) -> f64 {
        (self.cells() + 1) as f64 / ADJACENT_COST.min(HAZARD_COST)
    }

    /// Shortest-path objective: entering a cell costs `1 + penalty·cost`,
    /// and the goal is absorbing.
    fn step_cost(&self, entered: Cell, penalty: f64) -> f64 {
        1.0 + penalty * self.cell_cost(entered)
    }

    /// Builds `(safe, performant)` controllers by value iteration.
    pub fn build_controllers(&self) -> Controllers {
        let performant = self.controller(0.0);
        let safe = self.controller(self.safety_penalty());
        Controllers { safe, performant }
    }

    fn controller(&self, penalty: f64) -> Controller {
        let n = self.cells();
        let mut q_obj: QTable = vec![[0.0; NUM_ACTIONS]; n];
        loop {
            let values: Vec<f64> = q_obj.iter().map(max_of).collect();
            let mut change = 0.0f64;
            for s in 0..n {
                let z = self.cell(s);
                for a in 0..NUM_ACTIONS {
                    let q = self.shortest_path_backup(z, a, penalty, &values);
                    change = change.max(libm::fabs(q - q_obj[s][a]));
                    q_obj[s][a] = q;
                }
            }
            if change < VALUE_TOLERANCE {
                break;
            }
        }
        let policy: Vec<Action> = q_obj.iter().map(greedy).collect();
        let q_reward = self.evaluate(&policy, 0);
        let q_safety = self.evaluate(&policy, 1);
        Controller {
            policy,
            q_objective: q_obj,
            q_reward,
            q_safety,
        }
    }

    fn shortest_path_backup(&self, z: Cell, a: Action, penalty: f64, values: &[f64]) -> f64 {
        let entered = self.target(z, a);
        let future = if entered == self.goal {
            0.0
        } else {
            values[self.index(entered)]
        };
        -self.step_cost(entered, penalty) + future
    }

    /// Policy evaluation of one feedback component at the feature discount.
    fn evaluate(&self, policy: &[Action], component: usize) -> QTable {
        let n = self.cells();
        let g = self.feature_discount;
        let mut q: QTable = vec![[0.0; NUM_ACTIONS]; n];
        loop {
            let follow: Vec<f64> = (0..n).map(|s| q[s][policy[s]]).collect();
            let mut change = 0.0f64;
            for s in 0..n {
                let z = self.cell(s);
                for a in 0..NUM_ACTIONS {
                    let (next, fb) = self.transition(z, a);
                    let v = fb[component] + g * follow[self.index(next)];
                    change = change.max(libm::fabs(v - q[s][a]));
                    q[s][a] = v;
                }
            }
            if change < VALUE_TOLERANCE {
                break;
            }
        }
        q
    }

    /// Contexts of both controllers at the current state.
    pub fn contexts(&self, controllers: &Controllers) -> Vec<Vec<f64>> {
        let s = self.index(self.agent);
        controllers
            .iter()
            .map(|c| c.context(s, self.feature_discount))
            .collect()
    }

    /// Exact one-step feedback each controller would receive from the
    /// current state. Leaves the environment untouched.
    pub fn probe_true_feedback(&self, controllers: &Controllers) -> Vec<Vec<f64>> {
        let s = self.index(self.agent);
        controllers
            .iter()
            .map(|c| self.transition(self.agent, c.policy[s]).1.to_vec())
            .collect()
    }

    /// Applies `arm`'s action. Returns the contexts of the state acted in.
    pub fn grid_step(&mut self, arm: ArmId, controllers: &Controllers) -> Result<Transition> {
        if self.is_done() {
            return Err(Error::EpisodeFinished);
        }
        let controller = controllers.get(arm)?;
        let contexts = self.contexts(controllers);
        let action = controller.policy[self.index(self.agent)];
        let (next, fb) = self.transition(self.agent, action);
        self.agent = next;
        self.elapsed += 1;
        Ok(Transition {
            contexts,
            feedback: fb.to_vec(),
            done: self.is_done(),
        })
    }
}

fn max_of(row: &[f64; NUM_ACTIONS]) -> f64 {
    row.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// First action within round-off of the row maximum.
fn greedy(row: &[f64; NUM_ACTIONS]) -> Action {
    let best = max_of(row);
    row.iter().position(|&q| q >= best - 1e-8).unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Controller {
    /// Action per cell index.
    pub policy: Vec<Action>,
    /// Optimal action values of the controller's own objective (negated
    /// penalized path length to the goal).
    pub q_objective: QTable,
    /// Reward action values under `policy` at the feature discount.
    pub q_reward: QTable,
    /// Safety action values under `policy` at the feature discount.
    pub q_safety: QTable,
}

impl Controller {
    /// `ψ` for this controller's action at cell index `s`.
    pub fn context(&self, s: usize, feature_discount: f64) -> Vec<f64> {
        let a = self.policy[s];
        let scale = (1.0 - feature_discount) * FEATURE_WEIGHT;
        vec![scale * self.q_reward[s][a], scale * self.q_safety[s][a], FEATURE_BIAS]
    }

    /// Largest violation of the policy-evaluation and optimality Bellman
    /// equations over all cell–action pairs.
    pub fn bellman_residual(&self, env: &GridworldEnv, penalty: f64) -> f64 {
        let g = env.feature_discount;
        let values: Vec<f64> = self.q_objective.iter().map(max_of).collect();
        let mut worst = 0.0f64;
        for s in 0..env.cells() {
            let z = env.cell(s);
            for a in 0..NUM_ACTIONS {
                let (next, fb) = env.transition(z, a);
                let t = env.index(next);
                let pn = self.policy[t];
                worst = worst
                    .max(libm::fabs(self.q_reward[s][a] - (fb[0] + g * self.q_reward[t][pn])))
                    .max(libm::fabs(self.q_safety[s][a] - (fb[1] + g * self.q_safety[t][pn])))
                    .max(libm::fabs(
                        self.q_objective[s][a] - env.shortest_path_backup(z, a, penalty, &values),
                    ));
            }
        }
        worst
    }
}

/// The arm set: index 0 safe, index 1 performant.
#[derive(Debug, Clone, PartialEq)]
pub struct Controllers {
    pub safe: Controller,
    pub performant: Controller,
}

impl Controllers {
    pub fn get(&self, arm: ArmId) -> Result<&Controller> {
        match arm {
            SAFE_ARM => Ok(&self.safe),
            PERFORMANT_ARM => Ok(&self.performant),
            other => Err(Error::IndexOutOfRange { index: other.0, len: 2 }),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &Controller> {
        [&self.safe, &self.performant].into_iter()
    }
}

/// Gridworld plus its controllers, driven as a bandit environment.
#[derive(Debug, Clone)]
pub struct GridworldTask {
    env: GridworldEnv,
    controllers: Controllers,
}

impl GridworldTask {
    pub fn new(env: GridworldEnv) -> Self {
        let controllers = env.build_controllers();
        Self { env, controllers }
    }

    pub fn env(&self) -> &GridworldEnv {
        &self.env
    }

    pub fn controllers(&self) -> &Controllers {
        &self.controllers
    }
}

impl Environment for GridworldTask {
    fn arms(&self) -> usize {
        2
    }

    fn objectives(&self) -> usize {
        2
    }

    fn dim(&self) -> usize {
        3
    }

    fn contexts(&self) -> Vec<Vec<f64>> {
        self.env.contexts(&self.controllers)
    }

    fn true_means(&self) -> Vec<Vec<f64>> {
        self.env.probe_true_feedback(&self.controllers)
    }

    fn step(&mut self, arm: ArmId) -> Result<Transition> {
        self.env.grid_step(arm, &self.controllers)
    }

    fn reset(&mut self) {
        self.env.reset();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm2;
    use alloc::collections::VecDeque;

    fn lap(env: &GridworldEnv, c: &Controller) -> Vec<Cell> {
        let mut z = env.start();
        let mut path = vec![z];
        for _ in 0..100 {
            let a = c.policy[env.index(z)];
            let entered = env.target(z, a);
            path.push(entered);
            if entered == env.goal() {
                return path;
            }
            z = entered;
        }
        panic!("controller never reaches the goal");
    }

    /// BFS over king moves restricted to cells passing `allowed`.
    fn bfs_len(env: &GridworldEnv, allowed: impl Fn(Cell) -> bool) -> Option<usize> {
        let mut dist = vec![usize::MAX; env.cells()];
        let mut queue = VecDeque::new();
        dist[env.index(env.start())] = 0;
        queue.push_back(env.start());
        while let Some(z) = queue.pop_front() {
            for a in 0..NUM_ACTIONS {
                let n = env.target(z, a);
                if allowed(n) && dist[env.index(n)] == usize::MAX {
                    dist[env.index(n)] = dist[env.index(z)] + 1;
                    queue.push_back(n);
                }
            }
        }
        let d = dist[env.index(env.goal())];
        (d != usize::MAX).then_some(d)
    }

    #[test]
    fn empty_grid_controllers_coincide() {
        let env = GridworldEnv::new(5, 5, Cell::new(0, 0), Cell::new(4, 3), vec![], 100).unwrap();
        let c = env.build_controllers();
        assert_eq!(c.safe.policy, c.performant.policy);
    }

    #[test]
    fn fixture_paths() {
        let env = GridworldEnv::fixture(1000);
        let c = env.build_controllers();
        let fast = lap(&env, &c.performant);
        let careful = lap(&env, &c.safe);

        let shortest = bfs_len(&env, |_| true).unwrap();
        let shortest_safe = bfs_len(&env, |z| env.cell_cost(z) == 0.0).unwrap();
        assert_eq!(shortest, 6);
        assert!(shortest_safe > shortest);
        assert_eq!(fast.len() - 1, shortest);
        assert_eq!(careful.len() - 1, shortest_safe);

        // the unique shortest path is the diagonal through a hazard
        assert!(fast.contains(&Cell::new(3, 3)));
        assert!(fast.iter().any(|&z| env.cell_cost(z) == ADJACENT_COST));
        let lap_cost: f64 = careful.iter().skip(1).map(|&z| env.cell_cost(z)).sum();
        assert_eq!(lap_cost, 0.0);
    }

    #[test]
    fn safe_rollout_is_cost_free() {
        let mut env = GridworldEnv::fixture(300);
        let c = env.build_controllers();
        let mut total_cost = 0.0;
        while !env.is_done() {
            let tr = env.grid_step(SAFE_ARM, &c).unwrap();
            total_cost += 1.0 - tr.feedback[1];
        }
        assert_eq!(total_cost, 0.0);
        assert_eq!(env.grid_step(SAFE_ARM, &c), Err(Error::EpisodeFinished));
    }

    #[test]
    fn performant_costs_more_per_episode() {
        let mut env = GridworldEnv::fixture(1000);
        let c = env.build_controllers();
        let mut totals = [[0.0; 2]; 2];
        for (slot, arm) in [SAFE_ARM, PERFORMANT_ARM].into_iter().enumerate() {
            for _ in 0..30 {
                env.reset();
                while !env.is_done() {
                    let fb = env.grid_step(arm, &c).unwrap().feedback;
                    totals[slot][0] += fb[0];
                    totals[slot][1] += 1.0 - fb[1];
                }
            }
        }
        assert!(totals[1][1] > totals[0][1]);
        assert!(totals[1][0] > totals[0][0]);
    }

    #[test]
    fn goal_pays_full_reward() {
        let mut env = GridworldEnv::fixture(10);
        let c = env.build_controllers();
        env.place_agent(Cell::new(5, 5)).unwrap();
        let tr = env.grid_step(PERFORMANT_ARM, &c).unwrap();
        assert_eq!(tr.feedback[0], 1.0);
        assert_eq!(env.agent(), env.start());
    }

    #[test]
    fn hazard_adjacent_cell_lowers_safety() {
        let env = GridworldEnv::fixture(10);
        let (_, fb) = env.transition(Cell::new(1, 1), 3); // SE into (2,2)
        assert_eq!(env.cell_cost(Cell::new(2, 2)), ADJACENT_COST);
        assert!(fb[1] < 1.0);
    }

    #[test]
    fn feedback_and_contexts_stay_bounded() {
        for discount in [0.0, 0.5, 0.9] {
            let env = GridworldEnv::fixture(10).with_feature_discount(discount).unwrap();
            let c = env.build_controllers();
            for s in 0..env.cells() {
                for a in 0..NUM_ACTIONS {
                    let (_, fb) = env.transition(env.cell(s), a);
                    assert!(fb.iter().all(|v| (0.0..=1.0).contains(v)));
                }
                for ctrl in c.iter() {
                    assert!(norm2(&ctrl.context(s, discount)) <= 1.0);
                }
            }
        }
    }

    #[test]
    fn q_tables_are_bellman_fixed_points() {
        for discount in [0.0, 0.5] {
            let env = GridworldEnv::fixture(10).with_feature_discount(discount).unwrap();
            let c = env.build_controllers();
            assert!(c.performant.bellman_residual(&env, 0.0) <= VALUE_TOLERANCE);
            assert!(c.safe.bellman_residual(&env, env.safety_penalty()) <= VALUE_TOLERANCE);
            for ctrl in c.iter() {
                for (s, row) in ctrl.q_objective.iter().enumerate() {
                    assert!(row[ctrl.policy[s]] >= max_of(row) - 1e-8);
                }
            }
        }
    }

    #[test]
    fn probe_matches_step_and_has_no_side_effects() {
        let mut env = GridworldEnv::fixture(50);
        let c = env.build_controllers();
        env.place_agent(Cell::new(1, 1)).unwrap();
        let before = env.clone();
        let probe = env.probe_true_feedback(&c);
        assert_eq!(env, before);
        // beside the hazard the performant pick earns more but is less safe
        assert!(probe[1][0] > probe[0][0]);
        assert!(probe[1][1] < probe[0][1]);
        for arm in [SAFE_ARM, PERFORMANT_ARM] {
            let mut e = before.clone();
            let tr = e.grid_step(arm, &c).unwrap();
            assert_eq!(tr.feedback, probe[arm.0]);
        }
    }

    #[test]
    fn identical_actions_give_identical_probes() {
        let mut env = GridworldEnv::fixture(50);
        let c = env.build_controllers();
        let mut found = false;
        for s in 0..env.cells() {
            if c.safe.policy[s] == c.performant.policy[s] {
                env.place_agent(env.cell(s)).unwrap();
                let p = env.probe_true_feedback(&c);
                assert_eq!(p[0], p[1]);
                found = true;
            }
        }
        assert!(found);
    }

    #[test]
    fn invalid_maps() {
        let h = vec![Cell::new(2, 2)];
        assert!(GridworldEnv::new(3, 3, Cell::new(0, 0), Cell::new(2, 2), h, 10).is_err());
        assert!(GridworldEnv::new(3, 3, Cell::new(0, 0), Cell::new(0, 0), vec![], 10).is_err());
        assert!(GridworldEnv::new(3, 3, Cell::new(0, 0), Cell::new(3, 0), vec![], 10).is_err());
        assert!(GridworldEnv::new(3, 3, Cell::new(0, 0), Cell::new(2, 0), vec![], 0).is_err());
        assert!(GridworldEnv::fixture(5).with_feature_discount(1.0).is_err());
    }
}
