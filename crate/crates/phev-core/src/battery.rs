//! Internal-resistance battery model.
//!
//! Terminal power relates to current through `P = V_oc·I − R·I²`; the charge
//! dynamics integrate the current against capacity. Thermal effects and aging
//! are out of scope.

use crate::maps::{linspace, Curve1d};
use crate::{CoreError, Result};

#[derive(Debug, Clone)]
pub struct BatteryModel {
    /// Open-circuit voltage vs state of charge, V.
    pub ocv: Curve1d,
    /// Internal resistance vs state of charge, Ω.
    pub resistance: Curve1d,
    /// Capacity, coulombs.
    pub capacity: f64,
    /// Lower operating bound used by controllers.
    pub soc_low: f64,
    /// Upper operating bound used by controllers.
    pub soc_high: f64,
}

/// One battery step: current, next state of charge, and whether the requested
/// power exceeded what the pack can source (power clamped) or the charge state
/// ran into the hard [0, 1] bounds (charge clamped).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryStep {
    pub current: f64,
    pub power: f64,
    pub soc_next: f64,
    pub power_clamped: bool,
    pub soc_clamped: bool,
}

impl BatteryModel {
    /// Default pack: 26 Ah, OCV 300 + 25·soc volts, resistance 0.12 − 0.04·soc
    /// ohms (analytic placeholders over soc ∈ [0, 1]).
    pub fn default_model() -> Self {
        let socs = linspace(0.0, 1.0, 21);
        let ocv = Curve1d::new(socs.clone(), socs.iter().map(|s| 300.0 + 25.0 * s).collect())
            .expect("default ocv");
        let resistance = Curve1d::new(socs.clone(), socs.iter().map(|s| 0.12 - 0.04 * s).collect())
            .expect("default resistance");
        BatteryModel {
            ocv,
            resistance,
            capacity: 26.0 * 3600.0,
            soc_low: 0.3,
            soc_high: 0.9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for s in [0.0, 0.25, 0.5, 0.75, 1.0] {
            if self.ocv.interp(s) <= 0.0 {
                return Err(CoreError::invalid("battery", "open-circuit voltage must be > 0"));
            }
            if self.resistance.interp(s) <= 0.0 {
                return Err(CoreError::invalid("battery", "resistance must be > 0"));
            }
        }
        if self.capacity <= 0.0 {
            return Err(CoreError::invalid("battery", "capacity must be > 0"));
        }
        if !(0.0 < self.soc_low && self.soc_low < self.soc_high && self.soc_high <= 1.0) {
            return Err(CoreError::invalid("battery", "need 0 < soc_low < soc_high ≤ 1"));
        }
        Ok(())
    }

    /// Maximum dischargeable terminal power at a state of charge, W.
    pub fn max_power(&self, soc: f64) -> f64 {
        let v = self.ocv.interp(soc);
        let r = self.resistance.interp(soc);
        v * v / (4.0 * r)
    }

    /// Integrate one step at a requested terminal power (positive discharges).
    ///
    /// Power beyond the pack limit is clamped to the limit; a state of charge
    /// leaving [0, 1] is clamped with the flag set, so simulation can continue.
    pub fn step_power(&self, soc: f64, power: f64, dt: f64) -> BatteryStep {
        let v = self.ocv.interp(soc);
        let r = self.resistance.interp(soc);
        self.step_power_given(v, r, soc, power, dt)
    }

    /// [`BatteryModel::step_power`] with the curve lookups hoisted out, for
    /// callers sweeping many powers at one state of charge.
    pub fn step_power_given(&self, v: f64, r: f64, soc: f64, power: f64, dt: f64) -> BatteryStep {
        let p_max = v * v / (4.0 * r);
        let (p, power_clamped) = if power > p_max {
            (p_max, true)
        } else {
            (power, false)
        };
        let current = (v - (v * v - 4.0 * r * p).max(0.0).sqrt()) / (2.0 * r);
        let raw = soc - current * dt / self.capacity;
        let (soc_next, soc_clamped) = if raw < 0.0 {
            (0.0, true)
        } else if raw > 1.0 {
            (1.0, true)
        } else {
            (raw, false)
        };
        BatteryStep {
            current,
            power: p,
            soc_next,
            power_clamped,
            soc_clamped,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_power_holds_charge() {
        let b = BatteryModel::default_model();
        let s = b.step_power(0.5, 0.0, 1.0);
        assert_eq!(s.current, 0.0);
        assert_eq!(s.soc_next, 0.5);
        assert!(!s.power_clamped && !s.soc_clamped);
    }

    #[test]
    fn discharge_drops_charge_and_charge_raises_it() {
        let b = BatteryModel::default_model();
        let d = b.step_power(0.5, 10_000.0, 1.0);
        assert!(d.soc_next < 0.5 && d.current > 0.0);
        let c = b.step_power(0.5, -10_000.0, 1.0);
        assert!(c.soc_next > 0.5 && c.current < 0.0);
    }

    #[test]
    fn current_matches_bisection_root() {
        // V=320, R=0.1, P=10 kW: solve P = V·I − R·I² by bisection and compare.
        let socs = vec![0.0, 1.0];
        let b = BatteryModel {
            ocv: Curve1d::new(socs.clone(), vec![320.0, 320.0]).unwrap(),
            resistance: Curve1d::new(socs, vec![0.1, 0.1]).unwrap(),
            capacity: 26.0 * 3600.0,
            soc_low: 0.3,
            soc_high: 0.9,
        };
        let step = b.step_power(0.5, 10_000.0, 1.0);
        let (mut lo, mut hi) = (0.0_f64, 1600.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let p = 320.0 * mid - 0.1 * mid * mid;
            if p < 10_000.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let i_bisect = 0.5 * (lo + hi);
        assert!(
            (step.current - i_bisect).abs() < 1e-6,
            "quadratic root {} vs bisection {}",
            step.current,
            i_bisect
        );
    }

    #[test]
    fn overdraw_clamps_to_pack_limit() {
        let b = BatteryModel::default_model();
        let p_max = b.max_power(0.5);
        let s = b.step_power(0.5, p_max * 2.0, 1.0);
        assert!(s.power_clamped);
        assert!((s.power - p_max).abs() < 1e-9);
        assert!(s.current.is_finite());
    }

    #[test]
    fn soc_antisymmetric_at_small_power() {
        // resistance loss is second order: Δsoc(+P) ≈ −Δsoc(−P) within 1% at ≤1 kW
        let b = BatteryModel::default_model();
        for &p in &[100.0, 500.0, 1000.0] {
            let up = b.step_power(0.6, -p, 1.0).soc_next - 0.6;
            let dn = b.step_power(0.6, p, 1.0).soc_next - 0.6;
            let asym = (up + dn).abs() / up.abs();
            assert!(asym < 0.01, "asymmetry {asym} at {p} W");
        }
    }
}
