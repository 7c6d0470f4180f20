//! Single-step powertrain resolution shared by every controller.
//!
//! Wheel demand follows from the longitudinal force balance; the engine path
//! depends on the clutch (closed: wheel-coupled, open: generator-coupled on the
//! economy curve); the motor and mechanical brake absorb whatever torque is
//! left; and the battery integrates the resulting net electrical power.
//!
//! Violations are data, not errors: an infeasible command is clamped to the
//! nearest feasible actuation, the violation class is recorded, and the step
//! still resolves so closed-loop simulation can continue.

use crate::battery::BatteryModel;
use crate::engine::EngineModel;
use crate::generator::GeneratorModel;
use crate::motor::MotorModel;
use crate::vehicle::VehicleParams;
use crate::Result;

/// First constraint violated while resolving a step, in resolution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Violation {
    None,
    /// Engine speed unholdable: clutch closed outside the idle…max window, or
    /// clutch open with more torque than the generator can react.
    EngineSpeed,
    /// Positive wheel demand beyond the motor envelope after the engine share.
    MotorTorque,
    /// Requested terminal power above what the pack can source.
    BatteryPower,
    /// State of charge ran into the hard [0, 1] bounds.
    SocBound,
}

impl Violation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Violation::None => "none",
            Violation::EngineSpeed => "engine_speed",
            Violation::MotorTorque => "motor_torque",
            Violation::BatteryPower => "battery_power",
            Violation::SocBound => "soc_bound",
        }
    }
}

/// Fully resolved per-timestep powertrain state.
///
/// `engine_torque` is the executed (post-clamp) torque; `brake_torque` is the
/// signed wheel-side torque completing the balance (≤ 0, braking only).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowertrainStep {
    pub demand_torque: f64,
    pub wheel_speed: f64,
    pub engine_torque: f64,
    pub engine_speed: f64,
    pub motor_torque: f64,
    pub motor_speed: f64,
    pub generator_torque: f64,
    pub generator_speed: f64,
    pub brake_torque: f64,
    pub clutch: u8,
    pub battery_power: f64,
    pub battery_current: f64,
    pub fuel_rate: f64,
    pub soc_next: f64,
    pub feasible: bool,
    pub violation: Violation,
}

impl PowertrainStep {
    /// Residual of the wheel torque balance, N·m.
    pub fn torque_balance_residual(&self, p: &VehicleParams) -> f64 {
        self.engine_torque * p.gear_parallel * f64::from(self.clutch) * p.driveline_eff
            + self.motor_torque * p.gear_ev * p.driveline_eff
            + self.brake_torque
            - self.demand_torque
    }
}

/// All component models bundled for step resolution.
#[derive(Debug, Clone)]
pub struct Models {
    pub vehicle: VehicleParams,
    pub engine: EngineModel,
    pub motor: MotorModel,
    pub generator: GeneratorModel,
    pub battery: BatteryModel,
}

impl Models {
    pub fn default_models() -> Self {
        Models {
            vehicle: VehicleParams::default(),
            engine: EngineModel::default_model(),
            motor: MotorModel::default_model(),
            generator: GeneratorModel::default_model(),
            battery: BatteryModel::default_model(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.vehicle.validate()?;
        self.engine.validate()?;
        self.motor.validate()?;
        self.generator.validate()?;
        self.battery.validate()
    }

    /// Highest engine torque the generator can react in series operation.
    pub fn series_torque_cap(&self) -> f64 {
        (self.generator.max_torque / (self.vehicle.gear_series * self.vehicle.engine_gen_eff))
            .min(self.engine.max_torque)
    }
}

/// Wheel demand torque and wheel speed from the longitudinal force balance.
pub fn demand_torque(v: f64, a: f64, p: &VehicleParams) -> (f64, f64) {
    let force = p.mass * a
        + 0.5 * p.drag_coeff * p.air_density * p.windward_area * v * v
        + p.rolling_coeff * p.mass * p.gravity * p.road_grade.cos()
        + p.mass * p.gravity * p.road_grade.sin();
    (force * p.tyre_radius, v / p.tyre_radius)
}

/// Engine speed under the clutch law: closed couples it to the wheels, open
/// places it on the economy curve (zero torque = engine off).
///
/// Returns the speed and whether the operating point is holdable.
pub fn engine_speed(
    engine_torque: f64,
    wheel_speed: f64,
    clutch: u8,
    eng: &EngineModel,
    p: &VehicleParams,
) -> (f64, bool) {
    if clutch == 1 {
        let w = wheel_speed * p.gear_parallel;
        let ok = engine_torque <= 0.0 || w == 0.0 || (w >= eng.idle_speed && w <= eng.max_speed);
        (w, ok)
    } else {
        (eng.economy_speed(engine_torque), true)
    }
}

/// Instantaneous fuel mass flow, g/s: power × BSFC with the W·g/kWh → g/s
/// conversion. Zero torque or zero speed burns nothing.
pub fn fuel_rate(engine_torque: f64, engine_speed: f64, eng: &EngineModel) -> f64 {
    if engine_torque <= 0.0 || engine_speed <= 0.0 {
        return 0.0;
    }
    let power = engine_torque * engine_speed;
    power * eng.bsfc_at(engine_speed, engine_torque) / 3.6e6
}

/// Split the residual wheel torque between motor and mechanical brake.
///
/// Returns (merged wheel-side residual, motor shaft torque, brake torque,
/// envelope exceeded on the drive side).
pub fn split_motor_brake(
    demand: f64,
    engine_torque: f64,
    clutch: u8,
    motor_speed: f64,
    mot: &MotorModel,
    p: &VehicleParams,
) -> (f64, f64, f64, bool) {
    let t_mb = demand - engine_torque * p.gear_parallel * f64::from(clutch) * p.driveline_eff;
    let envelope = mot.torque_max_at(motor_speed);
    let regen_floor = -envelope * p.gear_ev * p.driveline_eff;
    if t_mb < regen_floor {
        // motor regenerates at capacity, friction brake takes the remainder
        let brake = t_mb - regen_floor;
        (t_mb, -envelope, brake, false)
    } else {
        let motor = t_mb / (p.gear_ev * p.driveline_eff);
        if motor > envelope {
            (t_mb, envelope, 0.0, true)
        } else {
            (t_mb, motor, 0.0, false)
        }
    }
}

/// Generator speed and torque: geared to the engine when the clutch is open,
/// idle when it is closed.
pub fn generator_state(
    engine_torque: f64,
    engine_speed: f64,
    clutch: u8,
    p: &VehicleParams,
) -> (f64, f64) {
    let w = engine_speed / p.gear_series;
    let t = engine_torque * p.gear_series * p.engine_gen_eff * (1.0 - f64::from(clutch));
    (t, w)
}

/// Net battery terminal power: motor electrical draw (direction-aware
/// efficiency), generator output as inflow, plus the auxiliary load.
pub fn battery_power_demand(
    motor_torque: f64,
    motor_speed: f64,
    gen_torque: f64,
    gen_speed: f64,
    mot: &MotorModel,
    gen: &GeneratorModel,
    p: &VehicleParams,
) -> f64 {
    let mech = motor_torque * motor_speed;
    let motor_elec = if motor_torque > 0.0 {
        mech / mot.efficiency_at(motor_speed, motor_torque)
    } else if motor_torque < 0.0 {
        mech * mot.efficiency_at(motor_speed, motor_torque)
    } else {
        0.0
    };
    motor_elec - gen_torque * gen_speed * gen.efficiency + p.aux_power
}

/// Resolve one powertrain step for a commanded action `(engine torque, clutch)`
/// at vehicle state `(v, a, soc)`.
///
/// Pure function: identical inputs give bit-identical outputs.
pub fn resolve_step(
    v: f64,
    a: f64,
    engine_torque_cmd: f64,
    clutch: u8,
    soc: f64,
    m: &Models,
    dt: f64,
) -> PowertrainStep {
    let p = &m.vehicle;
    let (t_d, w_d) = demand_torque(v, a, p);

    let mut violation = Violation::None;
    let mut t_e = engine_torque_cmd.clamp(0.0, m.engine.max_torque);

    // Engine stage. With the clutch closed the only feasible torque outside
    // the speed window is zero; with it open the generator reaction torque
    // caps what the engine can hold on the economy curve.
    let (_, speed_ok) = engine_speed(t_e, w_d, clutch, &m.engine, p);
    if !speed_ok {
        violation = Violation::EngineSpeed;
        t_e = 0.0;
    }
    if clutch == 0 {
        let cap = m.series_torque_cap();
        if t_e > cap {
            if violation == Violation::None {
                violation = Violation::EngineSpeed;
            }
            t_e = cap;
        }
    }
    let (w_e, _) = engine_speed(t_e, w_d, clutch, &m.engine, p);

    // Motor / brake stage.
    let w_m = w_d * p.gear_ev;
    let (_t_mb, t_m, t_b, motor_exceeded) = split_motor_brake(t_d, t_e, clutch, w_m, &m.motor, p);
    if motor_exceeded && violation == Violation::None {
        violation = Violation::MotorTorque;
    }

    // Generator stage (limits are enforced via the series cap above; the
    // speed limit is unreachable below the engine ceiling).
    let (t_g, w_g) = generator_state(t_e, w_e, clutch, p);

    // Battery stage.
    let p_b = battery_power_demand(t_m, w_m, t_g, w_g, &m.motor, &m.generator, p);
    let bat = m.battery.step_power(soc, p_b, dt);
    if bat.power_clamped && violation == Violation::None {
        violation = Violation::BatteryPower;
    }
    if bat.soc_clamped && violation == Violation::None {
        violation = Violation::SocBound;
    }

    let fuel = fuel_rate(t_e, w_e, &m.engine);

    PowertrainStep {
        demand_torque: t_d,
        wheel_speed: w_d,
        engine_torque: t_e,
        engine_speed: w_e,
        motor_torque: t_m,
        motor_speed: w_m,
        generator_torque: t_g,
        generator_speed: w_g,
        brake_torque: t_b,
        clutch,
        battery_power: bat.power,
        battery_current: bat.current,
        fuel_rate: fuel,
        soc_next: bat.soc_next,
        feasible: violation == Violation::None,
        violation,
    }
}
