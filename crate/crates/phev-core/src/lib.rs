//! Core library for a series-parallel plug-in hybrid energy-management workbench.
//!
//! The powertrain couples an engine to the wheels through a clutch: with the
//! clutch open the engine only spins a generator (series operation or pure EV),
//! with the clutch closed it drives the wheels directly (parallel operation).
//! Every controller in this workspace — the rule-based charge-depleting /
//! charge-sustaining strategy, the backward dynamic-programming benchmark, and
//! the reinforcement-learning agent built on top in `phev-rl` — shares the same
//! per-second step resolution implemented here.

pub mod battery;
pub mod config;
pub mod cycle;
pub mod dp;
pub mod engine;
pub mod env;
pub mod generator;
pub mod maps;
pub mod motor;
pub mod powertrain;
pub mod rules;
pub mod vehicle;

pub use battery::BatteryModel;
pub use cycle::DriveCycle;
pub use dp::{DpConfig, DpSolution};
pub use engine::EngineModel;
pub use env::{EmsEnv, EnvState, HybridAction, Policy, RewardParams, Totals, Transition};
pub use generator::GeneratorModel;
pub use motor::MotorModel;
pub use powertrain::{Models, PowertrainStep, Violation};
pub use rules::{CdcsController, Mode, RuleThresholds};
pub use vehicle::VehicleParams;

use thiserror::Error;

/// Errors surfaced by model construction, file ingestion, and simulation setup.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("invalid {what}: {msg}")]
    Invalid { what: &'static str, msg: String },
}

impl CoreError {
    pub fn invalid(what: &'static str, msg: impl Into<String>) -> Self {
        CoreError::Invalid {
            what,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;

/// rpm → rad/s.
pub fn rpm_to_rads(rpm: f64) -> f64 {
    rpm * std::f64::consts::PI / 30.0
}

/// rad/s → rpm.
pub fn rads_to_rpm(rads: f64) -> f64 {
    rads * 30.0 / std::f64::consts::PI
}

/// km/h → m/s.
pub fn kmh_to_ms(kmh: f64) -> f64 {
    kmh / 3.6
}

/// Joules → kWh.
pub fn joules_to_kwh(j: f64) -> f64 {
    j / 3.6e6
}
