//! Static vehicle-level parameters.

use crate::{CoreError, Result};

/// Chassis constants, gear ratios, and driveline efficiencies.
///
/// The three gear ratios name the path each one serves: `gear_ev` sits between
/// the drive motor and the wheels, `gear_parallel` between the engine and the
/// wheels when the clutch is closed, and `gear_series` between the engine and
/// the generator when it is open.
#[derive(Debug, Clone)]
pub struct VehicleParams {
    /// Curb mass, kg.
    pub mass: f64,
    /// Windward area, m².
    pub windward_area: f64,
    /// Aerodynamic drag coefficient.
    pub drag_coeff: f64,
    /// Air density, kg/m³.
    pub air_density: f64,
    /// Tyre rolling radius, m.
    pub tyre_radius: f64,
    /// Rolling resistance coefficient.
    pub rolling_coeff: f64,
    /// Gravitational acceleration, m/s².
    pub gravity: f64,
    /// Road grade, rad.
    pub road_grade: f64,
    /// Motor→wheel gear ratio.
    pub gear_ev: f64,
    /// Engine→wheel gear ratio (clutch closed).
    pub gear_parallel: f64,
    /// Engine→generator gear ratio (clutch open).
    pub gear_series: f64,
    /// Driveline mechanical efficiency.
    pub driveline_eff: f64,
    /// Engine→generator transmission efficiency.
    pub engine_gen_eff: f64,
    /// Constant auxiliary electrical load, W.
    pub aux_power: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        VehicleParams {
            mass: 1500.0,
            windward_area: 2.36,
            drag_coeff: 0.28,
            air_density: 1.206,
            tyre_radius: 0.3382,
            rolling_coeff: 0.012,
            gravity: 9.81,
            road_grade: 0.0,
            gear_ev: 10.126,
            gear_parallel: 2.8,
            gear_series: 2.07,
            driveline_eff: 0.96,
            engine_gen_eff: 0.97,
            aux_power: 300.0,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass", self.mass),
            ("windward_area", self.windward_area),
            ("drag_coeff", self.drag_coeff),
            ("air_density", self.air_density),
            ("tyre_radius", self.tyre_radius),
            ("rolling_coeff", self.rolling_coeff),
            ("gravity", self.gravity),
            ("gear_ev", self.gear_ev),
            ("gear_parallel", self.gear_parallel),
            ("gear_series", self.gear_series),
            ("driveline_eff", self.driveline_eff),
            ("engine_gen_eff", self.engine_gen_eff),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(CoreError::invalid(
                    "vehicle params",
                    format!("{name} must be strictly positive, got {v}"),
                ));
            }
        }
        for (name, v) in [
            ("driveline_eff", self.driveline_eff),
            ("engine_gen_eff", self.engine_gen_eff),
        ] {
            if v > 1.0 {
                return Err(CoreError::invalid(
                    "vehicle params",
                    format!("{name} must be ≤ 1, got {v}"),
                ));
            }
        }
        if self.aux_power < 0.0 || !self.aux_power.is_finite() {
            return Err(CoreError::invalid("vehicle params", "aux_power must be ≥ 0"));
        }
        if !self.road_grade.is_finite() {
            return Err(CoreError::invalid("vehicle params", "road_grade must be finite"));
        }
        Ok(())
    }
}
