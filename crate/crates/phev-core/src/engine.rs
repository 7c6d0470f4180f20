//! Engine model: fuel-rate map and the economic operating curve used when the
//! clutch is open and engine speed is free.

use crate::maps::{linspace, Curve1d, Grid2d};
use crate::{rpm_to_rads, CoreError, Result};

/// Engine with a brake-specific fuel-consumption (BSFC) surface in g/kWh over
/// (speed, torque) and a torque→speed economy curve.
///
/// The bundled BSFC surface is a documented analytic placeholder, not measured
/// data; swap in a `speed_rpm,torque_nm,value` CSV for a real engine.
#[derive(Debug, Clone)]
pub struct EngineModel {
    /// Maximum speed, rad/s.
    pub max_speed: f64,
    /// Idle speed, rad/s: minimum sustainable speed under load.
    pub idle_speed: f64,
    /// Maximum torque, N·m.
    pub max_torque: f64,
    /// BSFC surface, g/kWh.
    pub bsfc: Grid2d,
    /// Torque → speed along the most fuel-efficient locus; anchored at (0, 0)
    /// so zero torque means engine off.
    pub economy: Curve1d,
}

/// Analytic default BSFC placeholder: a paraboloid in normalized coordinates
/// with its minimum at 55% speed, 70% torque.
pub fn default_bsfc(speed: f64, torque: f64, max_speed: f64, max_torque: f64) -> f64 {
    let ws = speed / max_speed - 0.55;
    let ts = torque / max_torque - 0.70;
    220.0 * (1.0 + 0.35 * (ws * ws + ts * ts) * 4.0)
}

impl EngineModel {
    /// Default engine: 6000 rpm max, 1000 rpm idle, 120 N·m peak, analytic BSFC
    /// sampled on a 51×61 grid.
    pub fn default_model() -> Self {
        let max_speed = rpm_to_rads(6000.0);
        let idle_speed = rpm_to_rads(1000.0);
        let max_torque = 120.0;
        let speeds = linspace(idle_speed, max_speed, 51);
        let torques = linspace(0.0, max_torque, 61);
        let bsfc =
            Grid2d::from_fn(speeds, torques, |w, t| default_bsfc(w, t, max_speed, max_torque))
                .expect("default bsfc grid");
        let economy = economy_from_bsfc(&bsfc).expect("default economy curve");
        EngineModel {
            max_speed,
            idle_speed,
            max_torque,
            bsfc,
            economy,
        }
    }

    /// Build from an externally supplied BSFC grid; the economy curve is
    /// re-derived from the grid.
    pub fn with_bsfc(mut self, bsfc: Grid2d) -> Result<Self> {
        let economy = economy_from_bsfc(&bsfc)?;
        self.bsfc = bsfc;
        self.economy = economy;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.max_torque > 0.0 && self.max_speed > self.idle_speed && self.idle_speed > 0.0) {
            return Err(CoreError::invalid("engine", "speed/torque limits out of order"));
        }
        for i in 0..self.bsfc.speeds().len() {
            for j in 0..self.bsfc.torques().len() {
                if self.bsfc.value_at(i, j) <= 0.0 {
                    return Err(CoreError::invalid("engine", "BSFC must be strictly positive"));
                }
            }
        }
        if !self.economy.is_non_decreasing() {
            return Err(CoreError::invalid(
                "engine",
                "economy curve must be non-decreasing in torque",
            ));
        }
        if self.economy.interp(0.0) != 0.0 {
            return Err(CoreError::invalid("engine", "economy curve must pass through (0,0)"));
        }
        Ok(())
    }

    /// Speed on the economy curve for a torque command (engine off at zero).
    pub fn economy_speed(&self, torque: f64) -> f64 {
        self.economy.interp(torque)
    }

    /// BSFC lookup, g/kWh, clamped to the map boundary.
    pub fn bsfc_at(&self, speed: f64, torque: f64) -> f64 {
        self.bsfc.interp(speed, torque)
    }
}

/// Derive the economy curve from a BSFC grid: at each torque grid point the
/// speed minimizing BSFC (lowest speed on ties), anchored at (0, 0).
pub fn economy_from_bsfc(bsfc: &Grid2d) -> Result<Curve1d> {
    let mut xs = vec![0.0];
    let mut ys = vec![0.0];
    for (j, &t) in bsfc.torques().iter().enumerate() {
        if t <= 0.0 {
            continue;
        }
        let mut best_i = 0;
        let mut best = f64::INFINITY;
        for i in 0..bsfc.speeds().len() {
            let v = bsfc.value_at(i, j);
            if v < best {
                best = v;
                best_i = i;
            }
        }
        xs.push(t);
        ys.push(bsfc.speeds()[best_i]);
    }
    let curve = Curve1d::new(xs, ys)?;
    if !curve.is_non_decreasing() {
        return Err(CoreError::invalid(
            "engine",
            "BSFC argmin locus is not non-decreasing in torque",
        ));
    }
    Ok(curve)
}
