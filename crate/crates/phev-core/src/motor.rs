//! Drive-motor model: speed-dependent torque envelope and efficiency surface.

use crate::maps::{linspace, Curve1d, Grid2d};
use crate::{rpm_to_rads, CoreError, Result};

/// Drive motor: symmetric drive/regeneration torque envelope `f(ω)` and an
/// efficiency map queried with |torque|.
///
/// Defaults: 325 N·m to 4500 rpm, constant power beyond, 16000 rpm ceiling;
/// analytic efficiency placeholder clamped to [0.70, 0.95].
#[derive(Debug, Clone)]
pub struct MotorModel {
    /// Maximum speed, rad/s.
    pub max_speed: f64,
    /// Peak torque, N·m.
    pub max_torque: f64,
    /// Speed → maximum |torque| envelope.
    pub torque_limit: Curve1d,
    /// Efficiency surface over (speed, |torque|), in (0, 1].
    pub efficiency: Grid2d,
}

/// Analytic default efficiency placeholder.
pub fn default_efficiency(speed: f64, torque: f64, max_speed: f64, max_torque: f64) -> f64 {
    let ws = speed / max_speed - 0.45;
    let ts = torque.abs() / max_torque - 0.50;
    (0.93 - 0.25 * (ws * ws + ts * ts) * 2.0).clamp(0.70, 0.95)
}

impl MotorModel {
    pub fn default_model() -> Self {
        let max_speed = rpm_to_rads(16000.0);
        let max_torque = 325.0;
        let base_speed = rpm_to_rads(4500.0);
        let base_power = max_torque * base_speed;

        let mut xs = vec![0.0, base_speed];
        let mut ys = vec![max_torque, max_torque];
        let mut rpm = 5000.0;
        while rpm <= 16000.0 + 1e-9 {
            let w = rpm_to_rads(rpm);
            xs.push(w);
            ys.push(base_power / w);
            rpm += 500.0;
        }
        let torque_limit = Curve1d::new(xs, ys).expect("default torque envelope");

        let speeds = linspace(0.0, max_speed, 33);
        let torques = linspace(0.0, max_torque, 26);
        let efficiency = Grid2d::from_fn(speeds, torques, |w, t| {
            default_efficiency(w, t, max_speed, max_torque)
        })
        .expect("default efficiency grid");

        MotorModel {
            max_speed,
            max_torque,
            torque_limit,
            efficiency,
        }
    }

    pub fn with_efficiency(mut self, efficiency: Grid2d) -> Result<Self> {
        self.efficiency = efficiency;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.torque_limit.ys().iter().any(|&t| t < 0.0) {
            return Err(CoreError::invalid("motor", "torque envelope must be non-negative"));
        }
        if !self.torque_limit.is_non_increasing() {
            return Err(CoreError::invalid(
                "motor",
                "torque envelope must be non-increasing in speed",
            ));
        }
        for i in 0..self.efficiency.speeds().len() {
            for j in 0..self.efficiency.torques().len() {
                let e = self.efficiency.value_at(i, j);
                if !(e > 0.0 && e <= 1.0) {
                    return Err(CoreError::invalid("motor", "efficiency must lie in (0,1]"));
                }
            }
        }
        Ok(())
    }

    /// Maximum |torque| available at a shaft speed.
    pub fn torque_max_at(&self, speed: f64) -> f64 {
        self.torque_limit.interp(speed)
    }

    /// Efficiency at (speed, torque); the map is symmetric in torque sign.
    pub fn efficiency_at(&self, speed: f64, torque: f64) -> f64 {
        self.efficiency.interp(speed, torque.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        MotorModel::default_model().validate().unwrap();
    }

    #[test]
    fn envelope_flat_then_falling() {
        let m = MotorModel::default_model();
        assert_eq!(m.torque_max_at(0.0), 325.0);
        assert_eq!(m.torque_max_at(rpm_to_rads(4500.0)), 325.0);
        assert!(m.torque_max_at(rpm_to_rads(9000.0)) < 325.0);
        assert!(m.torque_max_at(rpm_to_rads(16000.0)) < m.torque_max_at(rpm_to_rads(9000.0)));
    }

    #[test]
    fn efficiency_symmetric_in_torque_sign() {
        let m = MotorModel::default_model();
        let w = rpm_to_rads(6000.0);
        assert_eq!(m.efficiency_at(w, 100.0), m.efficiency_at(w, -100.0));
    }
}
