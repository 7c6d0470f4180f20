//! Backward dynamic programming over a state-of-charge grid.
//!
//! With the drive cycle known in advance the only state is the battery charge.
//! The backward recursion minimizes economic stage cost (fuel + electricity,
//! no learning-shaped penalties) over the discretized action set; constraints
//! are enforced exactly by assigning a large finite cost to transitions that
//! violate the powertrain envelope or leave the charge band. The forward pass
//! re-minimizes at the actual continuous state of charge, which removes most
//! discretization chatter from the reported trajectory.

use crate::cycle::DriveCycle;
use crate::env::{EmsEnv, EnvState, HybridAction, Policy, RewardParams, RolloutResult, SocInit};
use crate::maps::linspace;
use crate::powertrain::{
    battery_power_demand, engine_speed, fuel_rate, generator_state, split_motor_brake, Models,
};
use crate::{CoreError, Result};

/// Grid and cost configuration.
#[derive(Debug, Clone)]
pub struct DpConfig {
    /// State-of-charge grid (strictly increasing; ends define the hard band).
    pub soc_grid: Vec<f64>,
    /// Engine torque grid, N·m.
    pub torque_grid: Vec<f64>,
    /// Cost assigned to infeasible or band-leaving transitions, CNY.
    pub infeasible_cost: f64,
    /// Terminal cost over final state of charge.
    pub terminal_cost: fn(f64) -> f64,
}

impl Default for DpConfig {
    fn default() -> Self {
        DpConfig {
            soc_grid: linspace(0.3, 0.9, 60),
            torque_grid: linspace(0.0, 120.0, 120),
            infeasible_cost: 1e6,
            terminal_cost: |_| 0.0,
        }
    }
}

impl DpConfig {
    pub fn with_grid_sizes(n_soc: usize, n_torque: usize) -> Self {
        DpConfig {
            soc_grid: linspace(0.3, 0.9, n_soc),
            torque_grid: linspace(0.0, 120.0, n_torque),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.soc_grid.len() < 2 || self.torque_grid.len() < 2 {
            return Err(CoreError::invalid("dp config", "grids need at least two points"));
        }
        if !self.soc_grid.windows(2).all(|w| w[1] > w[0])
            || !self.torque_grid.windows(2).all(|w| w[1] > w[0])
        {
            return Err(CoreError::invalid("dp config", "grids must be strictly increasing"));
        }
        if !(self.infeasible_cost > 0.0) {
            return Err(CoreError::invalid("dp config", "infeasible cost must be positive"));
        }
        Ok(())
    }
}

/// Solved cost-to-go table and grid policy.
#[derive(Debug, Clone)]
pub struct DpSolution {
    pub soc_grid: Vec<f64>,
    pub torque_grid: Vec<f64>,
    /// `cost_to_go[t][i]`: minimal remaining cost from stage `t` at grid point
    /// `i`. The final row equals the terminal cost.
    pub cost_to_go: Vec<Vec<f64>>,
    /// Best `(torque index, clutch)` per stage and grid point.
    pub policy: Vec<Vec<(u16, u8)>>,
    pub infeasible_cost: f64,
}

impl DpSolution {
    pub fn stages(&self) -> usize {
        self.cost_to_go.len()
    }

    /// Cells at or above this carry the infeasible sentinel (or interpolation
    /// against it) rather than a real cost.
    pub fn sentinel_threshold(&self) -> f64 {
        0.01 * self.infeasible_cost
    }

    /// First (stage, index) where cost-to-go increases with state of charge
    /// among cells holding real costs, if any. Piecewise-linear interpolation
    /// composed over many stages wobbles at the 1e-9-CNY level, so increases
    /// up to a micro-CNY are treated as noise.
    pub fn monotonicity_violation(&self) -> Option<(usize, usize, f64)> {
        let thresh = self.sentinel_threshold();
        for (t, row) in self.cost_to_go.iter().enumerate() {
            for i in 0..row.len() - 1 {
                if row[i] < thresh && row[i + 1] < thresh && row[i + 1] > row[i] + 1e-6 {
                    return Some((t, i, row[i + 1] - row[i]));
                }
            }
        }
        None
    }

    /// `stage,soc,cost` dump for value-surface plots.
    pub fn cost_to_go_csv(&self) -> String {
        let mut out = String::from("stage,soc,cost\n");
        for (t, row) in self.cost_to_go.iter().enumerate() {
            for (i, c) in row.iter().enumerate() {
                out.push_str(&format!("{},{},{}\n", t, self.soc_grid[i], c));
            }
        }
        out
    }
}

/// Stage-invariant part of an action's resolution: everything up to the
/// battery, which is the only state-dependent stage.
#[derive(Debug, Clone, Copy)]
struct ActionPre {
    battery_power: f64,
    stage_cost: f64,
    feasible: bool,
}

/// One cycle + model + pricing instance to benchmark.
pub struct DpProblem<'a> {
    pub cycle: &'a DriveCycle,
    pub models: &'a Models,
    pub reward: &'a RewardParams,
    pub cfg: DpConfig,
}

impl<'a> DpProblem<'a> {
    pub fn new(
        cycle: &'a DriveCycle,
        models: &'a Models,
        reward: &'a RewardParams,
        cfg: DpConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        if cycle.len() < 2 {
            return Err(CoreError::invalid("dp", "cycle needs at least two samples"));
        }
        Ok(DpProblem {
            cycle,
            models,
            reward,
            cfg,
        })
    }

    /// Resolve the state-independent part of every action at stage `t`, in
    /// tie-break order (ascending torque index, clutch open first).
    fn stage_actions(&self, t: usize) -> Vec<ActionPre> {
        let v = self.cycle.speed(t);
        let a = self.cycle.accel(t);
        let m = self.models;
        let p = &m.vehicle;
        let (t_d, w_d) = crate::powertrain::demand_torque(v, a, p);
        let series_cap = m.series_torque_cap();
        let mut out = Vec::with_capacity(self.cfg.torque_grid.len() * 2);
        for &torque in &self.cfg.torque_grid {
            for clutch in [0u8, 1u8] {
                let mut t_e = torque.clamp(0.0, m.engine.max_torque);
                let mut feasible = true;
                let (_, speed_ok) = engine_speed(t_e, w_d, clutch, &m.engine, p);
                if !speed_ok {
                    feasible = false;
                    t_e = 0.0;
                }
                if clutch == 0 && t_e > series_cap {
                    feasible = false;
                    t_e = series_cap;
                }
                let (w_e, _) = engine_speed(t_e, w_d, clutch, &m.engine, p);
                let w_m = w_d * p.gear_ev;
                let (_, t_m, _t_b, exceeded) = split_motor_brake(t_d, t_e, clutch, w_m, &m.motor, p);
                if exceeded {
                    feasible = false;
                }
                let (t_g, w_g) = generator_state(t_e, w_e, clutch, p);
                let p_b = battery_power_demand(t_m, w_m, t_g, w_g, &m.motor, &m.generator, p);
                let fuel = fuel_rate(t_e, w_e, &m.engine);
                out.push(ActionPre {
                    battery_power: p_b,
                    stage_cost: self.reward.stage_cost(fuel, p_b),
                    feasible,
                });
            }
        }
        out
    }

    /// Cost of taking a prepared action from a continuous state of charge,
    /// with the successor value interpolated from `next_row`.
    ///
    /// A query whose bracketing grid node carries the infeasible sentinel is
    /// itself infeasible: interpolating against the sentinel would leak
    /// diluted phantom costs backward through low-drain stages, so the
    /// boundary is handled conservatively instead.
    fn action_cost(
        &self,
        pre: &ActionPre,
        soc: f64,
        v_oc: f64,
        r_b: f64,
        next_row: &[f64],
    ) -> f64 {
        if !pre.feasible {
            return self.cfg.infeasible_cost;
        }
        let bat = self
            .models
            .battery
            .step_power_given(v_oc, r_b, soc, pre.battery_power, self.reward.dt);
        if bat.power_clamped || bat.soc_clamped {
            return self.cfg.infeasible_cost;
        }
        let lo = self.cfg.soc_grid[0];
        let hi = *self.cfg.soc_grid.last().unwrap();
        if bat.soc_next < lo || bat.soc_next > hi {
            return self.cfg.infeasible_cost;
        }
        let thresh = 0.01 * self.cfg.infeasible_cost;
        match interp_row_guarded(&self.cfg.soc_grid, next_row, bat.soc_next, thresh) {
            Some(j) => pre.stage_cost + j,
            None => self.cfg.infeasible_cost,
        }
    }

    /// Backward sweep over all stages.
    pub fn solve(&self) -> DpSolution {
        let n = self.cycle.len();
        let ns = self.cfg.soc_grid.len();
        let mut cost_to_go = vec![vec![0.0_f64; ns]; n];
        let mut policy = vec![vec![(0u16, 0u8); ns]; n - 1];
        for (i, &s) in self.cfg.soc_grid.iter().enumerate() {
            cost_to_go[n - 1][i] = (self.cfg.terminal_cost)(s);
        }
        for t in (0..n - 1).rev() {
            let actions = self.stage_actions(t);
            let (next_rows, rows) = cost_to_go.split_at_mut(t + 1);
            let next_row = &rows[0];
            let row_t = &mut next_rows[t];
            let pol_t = &mut policy[t];
            for (i, &soc) in self.cfg.soc_grid.iter().enumerate() {
                let v_oc = self.models.battery.ocv.interp(soc);
                let r_b = self.models.battery.resistance.interp(soc);
                let mut best = f64::INFINITY;
                let mut best_a = (0u16, 0u8);
                for (ai, pre) in actions.iter().enumerate() {
                    let c = self.action_cost(pre, soc, v_oc, r_b, next_row);
                    if c < best {
                        best = c;
                        best_a = ((ai / 2) as u16, (ai % 2) as u8);
                    }
                }
                row_t[i] = best;
                pol_t[i] = best_a;
            }
        }
        DpSolution {
            soc_grid: self.cfg.soc_grid.clone(),
            torque_grid: self.cfg.torque_grid.clone(),
            cost_to_go,
            policy,
            infeasible_cost: self.cfg.infeasible_cost,
        }
    }

    /// Re-evaluate one cell and subtract: zero by construction up to float
    /// noise, a probe for table corruption.
    pub fn bellman_residual(&self, sol: &DpSolution, t: usize, soc_index: usize) -> f64 {
        let soc = self.cfg.soc_grid[soc_index];
        let actions = self.stage_actions(t);
        let v_oc = self.models.battery.ocv.interp(soc);
        let r_b = self.models.battery.resistance.interp(soc);
        let next_row = &sol.cost_to_go[t + 1];
        let mut best = f64::INFINITY;
        for pre in &actions {
            let c = self.action_cost(pre, soc, v_oc, r_b, next_row);
            if c < best {
                best = c;
            }
        }
        sol.cost_to_go[t][soc_index] - best
    }

    /// Forward pass: simulate with continuous state of charge, re-minimizing
    /// over the action grid at every step.
    pub fn forward(&self, sol: &DpSolution, soc_init: f64) -> Result<RolloutResult> {
        let mut env = EmsEnv::new(
            self.cycle.clone(),
            self.models.clone(),
            self.reward.clone(),
            0,
        );
        env.reset(SocInit::Fixed(soc_init))?;
        let mut pol = DpPolicy { problem: self, sol };
        env.rollout(&mut pol)
    }
}

/// Time-indexed policy that re-minimizes the Bellman cost at the actual state
/// of charge each step.
pub struct DpPolicy<'a, 'b> {
    pub problem: &'b DpProblem<'a>,
    pub sol: &'b DpSolution,
}

impl DpPolicy<'_, '_> {
    fn best_action(&self, t: usize, soc: f64) -> HybridAction {
        let pr = self.problem;
        let actions = pr.stage_actions(t);
        let v_oc = pr.models.battery.ocv.interp(soc);
        let r_b = pr.models.battery.resistance.interp(soc);
        let next_row = &self.sol.cost_to_go[t + 1];
        let mut best = f64::INFINITY;
        let mut best_ai = 0usize;
        for (ai, pre) in actions.iter().enumerate() {
            let c = pr.action_cost(pre, soc, v_oc, r_b, next_row);
            if c < best {
                best = c;
                best_ai = ai;
            }
        }
        HybridAction {
            engine_torque: pr.cfg.torque_grid[best_ai / 2],
            clutch: (best_ai % 2) as u8,
        }
    }
}

impl Policy for DpPolicy<'_, '_> {
    fn decide(&mut self, t: usize, state: &EnvState) -> HybridAction {
        self.best_action(t, state.soc)
    }
}

/// Linear interpolation of a value row over the (strictly increasing) grid,
/// refusing to interpolate against cells at or above `sentinel_thresh`.
/// Exact node hits consult only the node itself.
fn interp_row_guarded(grid: &[f64], row: &[f64], x: f64, sentinel_thresh: f64) -> Option<f64> {
    let n = grid.len();
    let check = |v: f64| if v < sentinel_thresh { Some(v) } else { None };
    if x <= grid[0] {
        return check(row[0]);
    }
    if x >= grid[n - 1] {
        return check(row[n - 1]);
    }
    let mut lo = 0usize;
    let mut hi = n - 1;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if grid[mid] <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let f = (x - grid[lo]) / (grid[lo + 1] - grid[lo]);
    if f == 0.0 {
        return check(row[lo]);
    }
    if row[lo] >= sentinel_thresh || row[lo + 1] >= sentinel_thresh {
        return None;
    }
    Some(row[lo] + (row[lo + 1] - row[lo]) * f)
}
