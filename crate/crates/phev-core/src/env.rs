//! Energy-management environment: state construction, action decoding, the
//! fuel+electricity reward with constraint penalties, and episode rollouts.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::cycle::DriveCycle;
use crate::powertrain::{resolve_step, Models, PowertrainStep, Violation};
use crate::{CoreError, Result};

/// Speed normalizer for network inputs, m/s.
pub const V_NORM: f64 = 33.3;
/// Demand-torque normalizer for network inputs, N·m.
pub const TD_NORM: f64 = 2000.0;

/// Observed environment state at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvState {
    /// Vehicle speed, m/s.
    pub v: f64,
    /// Wheel demand torque, N·m.
    pub demand_torque: f64,
    /// Battery state of charge.
    pub soc: f64,
    /// Step index into the cycle.
    pub t: usize,
}

impl EnvState {
    /// Normalized view fed to function approximators.
    pub fn normalized(&self) -> [f64; 3] {
        [self.v / V_NORM, self.demand_torque / TD_NORM, self.soc]
    }
}

/// One hybrid action: continuous engine torque plus the binary clutch command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridAction {
    /// Engine torque, N·m (denormalized).
    pub engine_torque: f64,
    /// Clutch: 1 closed (engine drives the wheels), 0 open.
    pub clutch: u8,
}

impl HybridAction {
    /// Decode a normalized continuous channel u ∈ [−1, 1] into torque.
    pub fn from_normalized(u: f64, clutch: u8, max_torque: f64) -> Self {
        let u = u.clamp(-1.0, 1.0);
        HybridAction {
            engine_torque: (u + 1.0) / 2.0 * max_torque,
            clutch,
        }
    }

    pub fn to_normalized(&self, max_torque: f64) -> f64 {
        (self.engine_torque / max_torque * 2.0 - 1.0).clamp(-1.0, 1.0)
    }
}

/// Prices, efficiencies, and penalty shape for the reward.
#[derive(Debug, Clone)]
pub struct RewardParams {
    /// Fuel price, CNY/L.
    pub fuel_price: f64,
    /// Electricity price, CNY/kWh.
    pub elec_price: f64,
    /// Battery efficiency applied to priced electrical energy.
    pub battery_eff: f64,
    /// External charger efficiency applied to priced electrical energy.
    pub charger_eff: f64,
    /// Maximum per-step penalty, CNY.
    pub penalty_max: f64,
    /// Lower desired state-of-charge bound.
    pub soc_low: f64,
    /// Upper desired state-of-charge bound.
    pub soc_high: f64,
    /// Step length, s.
    pub dt: f64,
    /// Fuel density, g/L.
    pub fuel_density: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        RewardParams {
            fuel_price: 7.6,
            elec_price: 1.0,
            battery_eff: 0.95,
            charger_eff: 0.90,
            penalty_max: 0.1,
            soc_low: 0.3,
            soc_high: 0.9,
            dt: 1.0,
            fuel_density: 725.0,
        }
    }
}

impl RewardParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("fuel_price", self.fuel_price),
            ("elec_price", self.elec_price),
            ("battery_eff", self.battery_eff),
            ("charger_eff", self.charger_eff),
            ("penalty_max", self.penalty_max),
            ("soc_low", self.soc_low),
            ("soc_high", self.soc_high),
            ("dt", self.dt),
            ("fuel_density", self.fuel_density),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(CoreError::invalid(
                    "reward params",
                    format!("{name} must be strictly positive"),
                ));
            }
        }
        if self.soc_low >= self.soc_high {
            return Err(CoreError::invalid("reward params", "need soc_low < soc_high"));
        }
        Ok(())
    }

    /// Fuel cost of one step, CNY.
    pub fn fuel_cost(&self, fuel_rate: f64) -> f64 {
        self.fuel_price * fuel_rate * self.dt / self.fuel_density
    }

    /// Electricity cost of one step, CNY (signed: regeneration credits).
    pub fn elec_cost(&self, battery_power: f64) -> f64 {
        self.elec_price * battery_power * self.dt / 3.6e6 / (self.battery_eff * self.charger_eff)
    }

    /// Economic stage cost r = fuel + electricity, CNY. Shared by the
    /// environment reward and the dynamic-programming stage cost.
    pub fn stage_cost(&self, fuel_rate: f64, battery_power: f64) -> f64 {
        self.fuel_cost(fuel_rate) + self.elec_cost(battery_power)
    }

    /// Linear out-of-band state-of-charge penalty (magnitude form), CNY.
    pub fn soc_penalty(&self, soc: f64) -> f64 {
        if soc > self.soc_high {
            self.penalty_max * (soc - self.soc_high) / (1.0 - self.soc_high)
        } else if soc < self.soc_low {
            self.penalty_max * (self.soc_low - soc) / self.soc_low
        } else {
            0.0
        }
    }

    /// Penalty for clamp-inducing actuation violations, CNY.
    pub fn violation_penalty(&self, violation: Violation) -> f64 {
        match violation {
            Violation::EngineSpeed | Violation::BatteryPower => self.penalty_max * self.dt,
            _ => 0.0,
        }
    }
}

/// Per-step reward decomposition. `reward` is exactly the negated sum of the
/// three cost terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardBreakdown {
    pub fuel_cny: f64,
    pub elec_cny: f64,
    pub cost_cny: f64,
    pub violation_penalty: f64,
    pub soc_penalty: f64,
    pub reward: f64,
}

/// Stored (state, action, reward, next state, done) sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: EnvState,
    pub action: HybridAction,
    pub reward: f64,
    pub next_state: EnvState,
    pub done: bool,
}

/// Initial state-of-charge policy for resets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SocInit {
    Fixed(f64),
    /// Uniform draw from [0.3, 0.8].
    Randomized,
}

/// Outcome of one environment step.
#[derive(Debug, Clone, Copy)]
pub struct StepOutcome {
    pub transition: Transition,
    pub step: PowertrainStep,
    pub breakdown: RewardBreakdown,
}

/// The energy-management MDP over one drive cycle.
pub struct EmsEnv {
    pub cycle: DriveCycle,
    pub models: Models,
    pub reward: RewardParams,
    t: usize,
    soc: f64,
    rng: ChaCha12Rng,
}

impl EmsEnv {
    pub fn new(cycle: DriveCycle, models: Models, reward: RewardParams, seed: u64) -> Self {
        EmsEnv {
            cycle,
            models,
            reward,
            t: 0,
            soc: 0.5,
            rng: ChaCha12Rng::seed_from_u64(seed),
        }
    }

    pub fn state(&self) -> EnvState {
        let v = self.cycle.speed(self.t);
        let a = if self.t < self.cycle.steps() {
            self.cycle.accel(self.t)
        } else {
            0.0
        };
        let (t_d, _) = crate::powertrain::demand_torque(v, a, &self.models.vehicle);
        EnvState {
            v,
            demand_torque: t_d,
            soc: self.soc,
            t: self.t,
        }
    }

    pub fn done(&self) -> bool {
        self.t >= self.cycle.steps()
    }

    pub fn reset(&mut self, init: SocInit) -> Result<EnvState> {
        let soc = match init {
            SocInit::Fixed(s) => {
                if !(0.0..=1.0).contains(&s) {
                    return Err(CoreError::invalid(
                        "soc_init",
                        format!("{s} outside [0, 1]"),
                    ));
                }
                s
            }
            SocInit::Randomized => self.rng.random_range(0.3..=0.8),
        };
        self.t = 0;
        self.soc = soc;
        Ok(self.state())
    }

    /// Advance one step with the commanded action.
    pub fn step(&mut self, action: HybridAction) -> Result<StepOutcome> {
        if self.done() {
            return Err(CoreError::invalid("env", "episode already finished"));
        }
        let state = self.state();
        let v = self.cycle.speed(self.t);
        let a = self.cycle.accel(self.t);
        let step = resolve_step(
            v,
            a,
            action.engine_torque,
            action.clutch,
            self.soc,
            &self.models,
            self.reward.dt,
        );

        let fuel_cny = self.reward.fuel_cost(step.fuel_rate);
        let elec_cny = self.reward.elec_cost(step.battery_power);
        let cost_cny = fuel_cny + elec_cny;
        let violation_penalty = self.reward.violation_penalty(step.violation);
        let soc_penalty = self.reward.soc_penalty(step.soc_next);
        let total = cost_cny + violation_penalty + soc_penalty;
        let breakdown = RewardBreakdown {
            fuel_cny,
            elec_cny,
            cost_cny,
            violation_penalty,
            soc_penalty,
            reward: -total,
        };

        self.t += 1;
        self.soc = step.soc_next;
        let next_state = self.state();
        let done = self.done();

        Ok(StepOutcome {
            transition: Transition {
                state,
                action,
                reward: breakdown.reward,
                next_state,
                done,
            },
            step,
            breakdown,
        })
    }
}

/// A controller mapping (step index, state) to an action.
pub trait Policy {
    fn decide(&mut self, t: usize, state: &EnvState) -> HybridAction;
}

impl<F> Policy for F
where
    F: FnMut(usize, &EnvState) -> HybridAction,
{
    fn decide(&mut self, t: usize, state: &EnvState) -> HybridAction {
        self(t, state)
    }
}

/// One trace row per executed step. `soc` is the post-step value; the brake
/// column reports the magnitude of the friction-brake torque.
#[derive(Debug, Clone, Copy)]
pub struct TraceRow {
    pub t: usize,
    pub v: f64,
    pub a: f64,
    pub demand_torque: f64,
    pub engine_torque: f64,
    pub clutch: u8,
    pub engine_speed: f64,
    pub motor_torque: f64,
    pub generator_torque: f64,
    pub brake_torque: f64,
    pub battery_power: f64,
    pub soc: f64,
    pub fuel_g: f64,
    pub cost_cny: f64,
    pub violation: Violation,
}

/// Episode aggregates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Totals {
    pub steps: usize,
    pub fuel_g: f64,
    pub fuel_liters: f64,
    /// Net battery energy, kWh, positive when discharging.
    pub elec_kwh: f64,
    /// Economic cost Σ(fuel + electricity), CNY.
    pub cost_cny: f64,
    pub violation_penalty_cny: f64,
    pub soc_penalty_cny: f64,
    /// Σ reward = −(cost + penalties).
    pub reward_sum: f64,
    pub engaged_steps: usize,
    /// 100 · engaged steps / total steps.
    pub engagement_pct: f64,
    pub violations: usize,
    pub soc_initial: f64,
    pub soc_final: f64,
}

/// Full rollout record.
pub struct RolloutResult {
    pub rows: Vec<TraceRow>,
    pub totals: Totals,
}

impl EmsEnv {
    /// Run a policy from the current (already reset) state to the end of the
    /// cycle, collecting the trace and aggregates.
    pub fn rollout(&mut self, policy: &mut dyn Policy) -> Result<RolloutResult> {
        let soc_initial = self.soc;
        let mut rows = Vec::with_capacity(self.cycle.steps());
        let mut fuel_g = 0.0;
        let mut elec_j = 0.0;
        let mut cost = 0.0;
        let mut vpen = 0.0;
        let mut spen = 0.0;
        let mut reward_sum = 0.0;
        let mut engaged = 0usize;
        let mut violations = 0usize;
        while !self.done() {
            let state = self.state();
            let action = policy.decide(self.t, &state);
            let out = self.step(action)?;
            let s = out.step;
            if s.clutch == 1 {
                engaged += 1;
            }
            if !s.feasible {
                violations += 1;
            }
            fuel_g += s.fuel_rate * self.reward.dt;
            elec_j += s.battery_power * self.reward.dt;
            cost += out.breakdown.cost_cny;
            vpen += out.breakdown.violation_penalty;
            spen += out.breakdown.soc_penalty;
            reward_sum += out.breakdown.reward;
            rows.push(TraceRow {
                t: state.t,
                v: state.v,
                a: self.cycle.accel(state.t),
                demand_torque: s.demand_torque,
                engine_torque: s.engine_torque,
                clutch: s.clutch,
                engine_speed: s.engine_speed,
                motor_torque: s.motor_torque,
                generator_torque: s.generator_torque,
                brake_torque: s.brake_torque.abs(),
                battery_power: s.battery_power,
                soc: s.soc_next,
                fuel_g: s.fuel_rate * self.reward.dt,
                cost_cny: out.breakdown.cost_cny,
                violation: s.violation,
            });
        }
        let steps = rows.len();
        let totals = Totals {
            steps,
            fuel_g,
            fuel_liters: fuel_g / self.reward.fuel_density,
            elec_kwh: elec_j / 3.6e6,
            cost_cny: cost,
            violation_penalty_cny: vpen,
            soc_penalty_cny: spen,
            reward_sum,
            engaged_steps: engaged,
            engagement_pct: 100.0 * engaged as f64 / steps as f64,
            violations,
            soc_initial,
            soc_final: self.soc,
        };
        Ok(RolloutResult { rows, totals })
    }
}

/// Trace CSV header shared by every controller's output.
pub const TRACE_HEADER: &str = "t,v,a,T_d,T_e,k_c,omega_e,T_m,T_g,T_b,P_b,soc,fuel_g,cost_cny,violation";

pub fn trace_to_csv(rows: &[TraceRow]) -> String {
    let mut out = String::with_capacity(rows.len() * 96 + 128);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.t,
            r.v,
            r.a,
            r.demand_torque,
            r.engine_torque,
            r.clutch,
            r.engine_speed,
            r.motor_torque,
            r.generator_torque,
            r.brake_torque,
            r.battery_power,
            r.soc,
            r.fuel_g,
            r.cost_cny,
            r.violation.as_str()
        ));
    }
    out
}
