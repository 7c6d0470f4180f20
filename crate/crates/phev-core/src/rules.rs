//! Deterministic charge-depleting / charge-sustaining controller.
//!
//! Above the floor the strategy spends battery: electric drive for ordinary
//! demand, engine assistance only when demand exceeds the engine's optimal
//! working point (series below the parallel speed threshold, parallel above
//! it). At the floor it flips to sustaining: the engine tracks demand, driving
//! the wheels directly above the threshold speed and generating otherwise.
//! Braking recovers energy unless the battery is already at its ceiling.

use crate::env::{EnvState, HybridAction, Policy};
use crate::kmh_to_ms;
use crate::powertrain::Models;

/// Operating-mode label attached to each decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Ev,
    Series,
    Parallel,
    EngineDirect,
    Regen,
    MechBrake,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Ev => "ev",
            Mode::Series => "series",
            Mode::Parallel => "parallel",
            Mode::EngineDirect => "engine_direct",
            Mode::Regen => "regen",
            Mode::MechBrake => "mech_brake",
        }
    }

    /// Clutch state implied by the label.
    pub fn clutch(&self) -> u8 {
        matches!(self, Mode::Parallel | Mode::EngineDirect).into()
    }
}

/// Switching thresholds. Defaults: depleting floor 0.3, ceiling 0.9, parallel
/// speed threshold 60 km/h, engine torque window derived from the fuel map.
#[derive(Debug, Clone)]
pub struct RuleThresholds {
    pub soc_cd_floor: f64,
    pub soc_ceiling: f64,
    /// Minimum speed for wheel-coupled engine operation, m/s.
    pub v_parallel: f64,
    /// Lowest torque on the economy curve whose BSFC is within 10% of the
    /// curve minimum.
    pub engine_torque_min: f64,
    pub engine_torque_max: f64,
}

impl RuleThresholds {
    pub fn from_models(m: &Models) -> Self {
        let eng = &m.engine;
        // BSFC along the economy curve at each torque grid point
        let mut curve: Vec<(f64, f64)> = Vec::new();
        for &t in eng.bsfc.torques() {
            if t <= 0.0 {
                continue;
            }
            curve.push((t, eng.bsfc_at(eng.economy_speed(t), t)));
        }
        let best = curve.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let torque_min = curve
            .iter()
            .find(|p| p.1 <= 1.1 * best)
            .map(|p| p.0)
            .unwrap_or(0.0);
        RuleThresholds {
            soc_cd_floor: 0.3,
            soc_ceiling: 0.9,
            v_parallel: kmh_to_ms(60.0),
            engine_torque_min: torque_min,
            engine_torque_max: eng.max_torque,
        }
    }
}

/// The rule-based controller. Memoryless: identical states give identical
/// actions.
pub struct CdcsController<'a> {
    pub thresholds: RuleThresholds,
    pub models: &'a Models,
    series_cap: f64,
}

impl<'a> CdcsController<'a> {
    pub fn new(models: &'a Models) -> Self {
        CdcsController {
            thresholds: RuleThresholds::from_models(models),
            models,
            series_cap: models.series_torque_cap(),
        }
    }

    pub fn with_thresholds(models: &'a Models, thresholds: RuleThresholds) -> Self {
        CdcsController {
            thresholds,
            models,
            series_cap: models.series_torque_cap(),
        }
    }

    /// Engine torque at the BSFC minimum for a given shaft speed.
    fn optimal_torque_at(&self, engine_speed: f64) -> f64 {
        let eng = &self.models.engine;
        let mut best = f64::INFINITY;
        let mut best_t = 0.0;
        for &t in eng.bsfc.torques() {
            if t <= 0.0 {
                continue;
            }
            let b = eng.bsfc_at(engine_speed, t);
            if b < best {
                best = b;
                best_t = t;
            }
        }
        best_t
    }

    /// Wheel-torque equivalent of the engine's optimal working point: at
    /// parallel speeds the optimum at the wheel-coupled shaft speed, otherwise
    /// the economy-curve optimum.
    fn optimal_point_wheel(&self, v: f64) -> f64 {
        let p = &self.models.vehicle;
        let gear = p.gear_parallel * p.driveline_eff;
        if v >= self.thresholds.v_parallel {
            let w_e = v / p.tyre_radius * p.gear_parallel;
            self.optimal_torque_at(w_e) * gear
        } else {
            // economy-curve global optimum
            let eng = &self.models.engine;
            let mut best = f64::INFINITY;
            let mut best_t = 0.0;
            for &t in eng.bsfc.torques() {
                if t <= 0.0 {
                    continue;
                }
                let b = eng.bsfc_at(eng.economy_speed(t), t);
                if b < best {
                    best = b;
                    best_t = t;
                }
            }
            best_t * gear
        }
    }

    /// Engine setpoint on the economy curve whose electrical output covers a
    /// requested power, clamped to [torque_min, series cap].
    pub fn series_engine_setpoint(&self, p_req: f64) -> f64 {
        let m = self.models;
        let cap = self.series_cap.min(self.thresholds.engine_torque_max);
        let elec = |t_e: f64| {
            let w = m.engine.economy_speed(t_e);
            t_e * w * m.vehicle.engine_gen_eff * m.generator.efficiency
        };
        let mut t = if p_req <= 0.0 {
            0.0
        } else if elec(cap) <= p_req {
            cap
        } else {
            // electrical output is non-decreasing in torque along the curve
            let (mut lo, mut hi) = (0.0_f64, cap);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if elec(mid) < p_req {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            hi
        };
        t = t.clamp(self.thresholds.engine_torque_min, cap);
        t
    }

    /// Electrical power the motor will draw to meet a positive wheel demand.
    fn motor_draw(&self, demand: f64, v: f64) -> f64 {
        let p = &self.models.vehicle;
        let w_m = v / p.tyre_radius * p.gear_ev;
        let t_m = (demand / (p.gear_ev * p.driveline_eff))
            .min(self.models.motor.torque_max_at(w_m));
        if t_m <= 0.0 {
            return p.aux_power;
        }
        t_m * w_m / self.models.motor.efficiency_at(w_m, t_m) + p.aux_power
    }

    /// Full rule tree: action plus mode label.
    pub fn decide_labeled(&self, state: &EnvState) -> (HybridAction, Mode) {
        let th = &self.thresholds;
        let p = &self.models.vehicle;
        let v = state.v;
        let t_d = state.demand_torque;
        let gear = p.gear_parallel * p.driveline_eff;
        let open = |t_e: f64| HybridAction {
            engine_torque: t_e,
            clutch: 0,
        };
        let closed = |t_e: f64| HybridAction {
            engine_torque: t_e,
            clutch: 1,
        };

        if state.soc > th.soc_cd_floor {
            // charge-depleting
            let opt_wheel = self.optimal_point_wheel(v);
            if t_d > opt_wheel {
                if v >= th.v_parallel {
                    if t_d > th.engine_torque_max * gear {
                        let t_e = self.series_engine_setpoint(self.motor_draw(t_d, v));
                        (open(t_e), Mode::Series)
                    } else {
                        let w_e = v / p.tyre_radius * p.gear_parallel;
                        let t_e = self
                            .optimal_torque_at(w_e)
                            .clamp(0.0, th.engine_torque_max);
                        (closed(t_e), Mode::Parallel)
                    }
                } else {
                    let t_e = self.series_engine_setpoint(self.motor_draw(t_d, v));
                    (open(t_e), Mode::Series)
                }
            } else if t_d < 0.0 {
                if state.soc > th.soc_ceiling {
                    (open(0.0), Mode::MechBrake)
                } else {
                    (open(0.0), Mode::Regen)
                }
            } else {
                (open(0.0), Mode::Ev)
            }
        } else {
            // charge-sustaining
            if t_d < 0.0 {
                return (open(0.0), Mode::Regen);
            }
            let t_min_wheel = th.engine_torque_min * gear;
            let t_max_wheel = th.engine_torque_max * gear;
            if t_d >= t_min_wheel {
                if t_d > t_max_wheel {
                    if v > th.v_parallel {
                        (closed(th.engine_torque_max), Mode::EngineDirect)
                    } else {
                        let t_e = self.series_engine_setpoint(self.motor_draw(t_d, v));
                        (open(t_e), Mode::Series)
                    }
                } else if v > th.v_parallel {
                    (closed(t_d / gear), Mode::EngineDirect)
                } else {
                    let t_e = self.series_engine_setpoint(self.motor_draw(t_d, v));
                    (open(t_e), Mode::Series)
                }
            } else {
                let t_e = self.series_engine_setpoint(self.motor_draw(t_d, v));
                (open(t_e), Mode::Series)
            }
        }
    }
}

impl Policy for CdcsController<'_> {
    fn decide(&mut self, _t: usize, state: &EnvState) -> HybridAction {
        self.decide_labeled(state).0
    }
}
