//! Generator model. The generator hangs off the engine through the series
//! gear; it never connects to the wheels.

use crate::{rpm_to_rads, CoreError, Result};

#[derive(Debug, Clone)]
pub struct GeneratorModel {
    /// Maximum speed, rad/s.
    pub max_speed: f64,
    /// Maximum torque, N·m.
    pub max_torque: f64,
    /// Mechanical→electrical conversion efficiency.
    pub efficiency: f64,
}

impl GeneratorModel {
    pub fn default_model() -> Self {
        GeneratorModel {
            max_speed: rpm_to_rads(13000.0),
            max_torque: 110.0,
            efficiency: 0.92,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.max_speed > 0.0 && self.max_torque > 0.0) {
            return Err(CoreError::invalid("generator", "limits must be positive"));
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(CoreError::invalid("generator", "efficiency must lie in (0,1]"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        GeneratorModel::default_model().validate().unwrap();
    }
}
