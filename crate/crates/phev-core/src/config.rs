//! Flat, line-oriented `key = value` configuration files with `[section]`
//! headers. Every model constant can be overridden; unknown keys are errors so
//! typos surface instead of silently running defaults.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::dp::DpConfig;
use crate::engine::economy_from_bsfc;
use crate::env::RewardParams;
use crate::maps::{linspace, Curve1d, Grid2d};
use crate::powertrain::Models;
use crate::{rpm_to_rads, CoreError, Result};

/// Parsed sections → keys → raw values.
#[derive(Debug, Clone, Default)]
pub struct KvConfig {
    pub sections: BTreeMap<String, BTreeMap<String, String>>,
    base_dir: PathBuf,
}

impl KvConfig {
    pub fn parse(text: &str, path: &str, base_dir: PathBuf) -> Result<Self> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                current = line[1..line.len() - 1].trim().to_string();
                sections.entry(current.clone()).or_default();
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CoreError::Parse {
                    path: path.to_string(),
                    line: idx + 1,
                    msg: format!("expected key = value, got {line:?}"),
                });
            };
            if current.is_empty() {
                return Err(CoreError::Parse {
                    path: path.to_string(),
                    line: idx + 1,
                    msg: "key outside any [section]".into(),
                });
            }
            sections
                .get_mut(&current)
                .unwrap()
                .insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(KvConfig { sections, base_dir })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| CoreError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Self::parse(&text, &path.display().to_string(), base)
    }

    fn resolve(&self, rel: &str) -> PathBuf {
        let p = Path::new(rel);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

/// Everything an experiment needs from a config file.
#[derive(Debug, Clone)]
pub struct Setup {
    pub models: Models,
    pub reward: RewardParams,
    pub dp: DpConfig,
}

impl Default for Setup {
    fn default() -> Self {
        Setup {
            models: Models::default_models(),
            reward: RewardParams::default(),
            dp: DpConfig::default(),
        }
    }
}

impl Setup {
    /// Defaults overridden by the given config file.
    pub fn from_file(path: &Path) -> Result<Setup> {
        let kv = KvConfig::load(path)?;
        Setup::from_kv(&kv)
    }

    pub fn from_kv(kv: &KvConfig) -> Result<Setup> {
        let mut setup = Setup::default();
        let mut dp_soc_points = setup.dp.soc_grid.len();
        let mut dp_torque_points = setup.dp.torque_grid.len();

        for (section, keys) in &kv.sections {
            for (key, value) in keys {
                let ctx = format!("[{section}] {key}");
                let num = || -> Result<f64> {
                    value.parse::<f64>().map_err(|_| {
                        CoreError::invalid("config", format!("{ctx}: not a number: {value:?}"))
                    })
                };
                match (section.as_str(), key.as_str()) {
                    ("vehicle", "mass") => setup.models.vehicle.mass = num()?,
                    ("vehicle", "windward_area") => setup.models.vehicle.windward_area = num()?,
                    ("vehicle", "drag_coeff") => setup.models.vehicle.drag_coeff = num()?,
                    ("vehicle", "air_density") => setup.models.vehicle.air_density = num()?,
                    ("vehicle", "tyre_radius") => setup.models.vehicle.tyre_radius = num()?,
                    ("vehicle", "rolling_coeff") => setup.models.vehicle.rolling_coeff = num()?,
                    ("vehicle", "gravity") => setup.models.vehicle.gravity = num()?,
                    ("vehicle", "road_grade") => setup.models.vehicle.road_grade = num()?,
                    ("vehicle", "gear_ev") => setup.models.vehicle.gear_ev = num()?,
                    ("vehicle", "gear_parallel") => setup.models.vehicle.gear_parallel = num()?,
                    ("vehicle", "gear_series") => setup.models.vehicle.gear_series = num()?,
                    ("vehicle", "driveline_eff") => setup.models.vehicle.driveline_eff = num()?,
                    ("vehicle", "engine_gen_eff") => setup.models.vehicle.engine_gen_eff = num()?,
                    ("vehicle", "aux_power") => setup.models.vehicle.aux_power = num()?,
                    ("engine", "max_speed_rpm") => {
                        setup.models.engine.max_speed = rpm_to_rads(num()?)
                    }
                    ("engine", "idle_speed_rpm") => {
                        setup.models.engine.idle_speed = rpm_to_rads(num()?)
                    }
                    ("engine", "max_torque") => setup.models.engine.max_torque = num()?,
                    ("engine", "bsfc_csv") => {
                        let grid = Grid2d::load_csv(&kv.resolve(value))?;
                        setup.models.engine.economy = economy_from_bsfc(&grid)?;
                        setup.models.engine.bsfc = grid;
                    }
                    ("motor", "max_speed_rpm") => {
                        setup.models.motor.max_speed = rpm_to_rads(num()?)
                    }
                    ("motor", "max_torque") => setup.models.motor.max_torque = num()?,
                    ("motor", "efficiency_csv") => {
                        setup.models.motor.efficiency = Grid2d::load_csv(&kv.resolve(value))?;
                    }
                    ("motor", "torque_curve_csv") => {
                        setup.models.motor.torque_limit =
                            load_curve(&kv.resolve(value), "speed_rpm,value", true)?;
                    }
                    ("generator", "max_speed_rpm") => {
                        setup.models.generator.max_speed = rpm_to_rads(num()?)
                    }
                    ("generator", "max_torque") => setup.models.generator.max_torque = num()?,
                    ("generator", "efficiency") => setup.models.generator.efficiency = num()?,
                    ("battery", "capacity_ah") => {
                        setup.models.battery.capacity = num()? * 3600.0
                    }
                    ("battery", "soc_low") => setup.models.battery.soc_low = num()?,
                    ("battery", "soc_high") => setup.models.battery.soc_high = num()?,
                    ("battery", "ocv_csv") => {
                        setup.models.battery.ocv =
                            load_curve(&kv.resolve(value), "soc,value", false)?;
                    }
                    ("battery", "resistance_csv") => {
                        setup.models.battery.resistance =
                            load_curve(&kv.resolve(value), "soc,value", false)?;
                    }
                    ("reward", "fuel_price") => setup.reward.fuel_price = num()?,
                    ("reward", "elec_price") => setup.reward.elec_price = num()?,
                    ("reward", "battery_eff") => setup.reward.battery_eff = num()?,
                    ("reward", "charger_eff") => setup.reward.charger_eff = num()?,
                    ("reward", "penalty_max") => setup.reward.penalty_max = num()?,
                    ("reward", "soc_low") => setup.reward.soc_low = num()?,
                    ("reward", "soc_high") => setup.reward.soc_high = num()?,
                    ("reward", "fuel_density") => setup.reward.fuel_density = num()?,
                    ("dp", "soc_points") => dp_soc_points = num()? as usize,
                    ("dp", "torque_points") => dp_torque_points = num()? as usize,
                    ("dp", "infeasible_cost") => setup.dp.infeasible_cost = num()?,
                    _ => {
                        return Err(CoreError::invalid(
                            "config",
                            format!("unknown key {ctx}"),
                        ))
                    }
                }
            }
        }

        setup.dp.soc_grid = linspace(
            setup.models.battery.soc_low,
            setup.models.battery.soc_high,
            dp_soc_points.max(2),
        );
        setup.dp.torque_grid = linspace(
            0.0,
            setup.models.engine.max_torque,
            dp_torque_points.max(2),
        );
        setup.models.validate()?;
        setup.reward.validate()?;
        setup.dp.validate()?;
        Ok(setup)
    }
}

/// Load a two-column curve CSV (`x,value`), optionally converting the x axis
/// from rpm to rad/s.
fn load_curve(path: &Path, expected_header: &str, x_is_rpm: bool) -> Result<Curve1d> {
    let text = fs::read_to_string(path).map_err(|source| CoreError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let pstr = path.display().to_string();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if idx == 0 {
            if line.replace(' ', "") != expected_header {
                return Err(CoreError::Parse {
                    path: pstr,
                    line: 1,
                    msg: format!("expected header {expected_header}, got {line}"),
                });
            }
            continue;
        }
        let Some((a, b)) = line.split_once(',') else {
            return Err(CoreError::Parse {
                path: pstr,
                line: idx + 1,
                msg: "expected 2 fields".into(),
            });
        };
        let x: f64 = a.trim().parse().map_err(|_| CoreError::Parse {
            path: pstr.clone(),
            line: idx + 1,
            msg: format!("bad number {a:?}"),
        })?;
        let y: f64 = b.trim().parse().map_err(|_| CoreError::Parse {
            path: pstr.clone(),
            line: idx + 1,
            msg: format!("bad number {b:?}"),
        })?;
        xs.push(if x_is_rpm { rpm_to_rads(x) } else { x });
        ys.push(y);
    }
    Curve1d::new(xs, ys)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_defaults() {
        let kv = KvConfig::parse("", "mem", PathBuf::from(".")).unwrap();
        let s = Setup::from_kv(&kv).unwrap();
        assert_eq!(s.models.vehicle.mass, 1500.0);
        assert_eq!(s.dp.soc_grid.len(), 60);
        assert_eq!(s.dp.torque_grid.len(), 120);
    }

    #[test]
    fn overrides_apply() {
        let text = "[vehicle]\nmass = 1600\n\n[reward]\nfuel_price = 8.0\n[dp]\nsoc_points = 10\n";
        let kv = KvConfig::parse(text, "mem", PathBuf::from(".")).unwrap();
        let s = Setup::from_kv(&kv).unwrap();
        assert_eq!(s.models.vehicle.mass, 1600.0);
        assert_eq!(s.reward.fuel_price, 8.0);
        assert_eq!(s.dp.soc_grid.len(), 10);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let kv =
            KvConfig::parse("[vehicle]\nmasss = 1600\n", "mem", PathBuf::from(".")).unwrap();
        assert!(Setup::from_kv(&kv).is_err());
    }

    #[test]
    fn key_outside_section_names_line() {
        let err = KvConfig::parse("mass = 1600\n", "mem", PathBuf::from(".")).unwrap_err();
        assert!(err.to_string().contains("mem:1"), "{err}");
    }

    #[test]
    fn comments_and_blanks_ignored() {
        let text = "# top\n[vehicle]\n# comment\nmass = 1550 # trailing\n\n";
        let kv = KvConfig::parse(text, "mem", PathBuf::from(".")).unwrap();
        let s = Setup::from_kv(&kv).unwrap();
        assert_eq!(s.models.vehicle.mass, 1550.0);
    }
}
