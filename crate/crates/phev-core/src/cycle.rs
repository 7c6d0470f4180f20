//! Drive cycles: 1 Hz speed traces with ingestion, resampling, repetition, and
//! a bundled synthetic cycle for tests and desk-scale experiments.

use std::fs;
use std::path::Path;

use crate::{CoreError, Result};

/// Hard sanity bound on per-second acceleration, m/s².
const MAX_ACCEL: f64 = 5.0;

/// Speed unit of a cycle file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpeedUnit {
    Kmh,
    Ms,
}

impl std::str::FromStr for SpeedUnit {
    type Err = CoreError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kmh" | "km/h" => Ok(SpeedUnit::Kmh),
            "ms" | "m/s" => Ok(SpeedUnit::Ms),
            other => Err(CoreError::invalid("unit", format!("unknown speed unit {other:?}"))),
        }
    }
}

/// A 1 Hz speed-vs-time profile. Acceleration is the forward difference, so
/// the action taken at step `t` produces the speed at `t + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveCycle {
    pub name: String,
    /// Sample spacing, s (fixed 1.0).
    pub dt: f64,
    /// Speeds in m/s, one per second.
    pub speeds: Vec<f64>,
    /// Number of base-cycle repetitions contained in `speeds`.
    pub repeats: usize,
}

impl DriveCycle {
    pub fn from_speeds(name: impl Into<String>, speeds: Vec<f64>) -> Result<Self> {
        let cycle = DriveCycle {
            name: name.into(),
            dt: 1.0,
            speeds,
            repeats: 1,
        };
        cycle.validate()?;
        Ok(cycle)
    }

    fn validate(&self) -> Result<()> {
        if self.speeds.len() < 2 {
            return Err(CoreError::invalid("cycle", "need at least two samples"));
        }
        for (i, &v) in self.speeds.iter().enumerate() {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(CoreError::invalid(
                    "cycle",
                    format!("negative or non-finite speed {v} at sample {i}"),
                ));
            }
        }
        for (i, w) in self.speeds.windows(2).enumerate() {
            let a = (w[1] - w[0]) / self.dt;
            if a.abs() > MAX_ACCEL {
                return Err(CoreError::invalid(
                    "cycle",
                    format!("|accel| {a:.2} m/s² at sample {i} exceeds the {MAX_ACCEL} m/s² bound"),
                ));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.speeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.speeds.is_empty()
    }

    /// Number of actionable steps (the final sample has no successor).
    pub fn steps(&self) -> usize {
        self.speeds.len() - 1
    }

    pub fn speed(&self, t: usize) -> f64 {
        self.speeds[t]
    }

    /// Forward-difference acceleration at step `t` (`t < len − 1`).
    pub fn accel(&self, t: usize) -> f64 {
        (self.speeds[t + 1] - self.speeds[t]) / self.dt
    }

    pub fn max_speed(&self) -> f64 {
        self.speeds.iter().cloned().fold(0.0, f64::max)
    }

    /// Trapezoidal distance, m.
    pub fn distance(&self) -> f64 {
        self.speeds
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]) * self.dt)
            .sum()
    }

    /// Concatenate `n` copies. Requires stationary endpoints for `n ≥ 2` so
    /// the splice carries zero acceleration.
    pub fn repeat(&self, n: usize) -> Result<DriveCycle> {
        if n == 0 {
            return Err(CoreError::invalid("cycle", "repeat count must be ≥ 1"));
        }
        if n == 1 {
            return Ok(self.clone());
        }
        let first = *self.speeds.first().unwrap();
        let last = *self.speeds.last().unwrap();
        if first.abs() > 1e-9 || last.abs() > 1e-9 {
            return Err(CoreError::invalid(
                "cycle",
                "repeat needs stationary endpoints (speed 0 at both ends)",
            ));
        }
        let mut speeds = Vec::with_capacity(self.speeds.len() * n);
        for _ in 0..n {
            speeds.extend_from_slice(&self.speeds);
        }
        let cycle = DriveCycle {
            name: format!("{}x{}", self.name, n),
            dt: self.dt,
            speeds,
            repeats: self.repeats * n,
        };
        cycle.validate()?;
        Ok(cycle)
    }

    /// Load a `t_s,v` CSV, resample to 1 Hz by linear interpolation, and
    /// convert speeds to m/s.
    pub fn load_csv(path: &Path, unit: SpeedUnit) -> Result<DriveCycle> {
        let text = fs::read_to_string(path).map_err(|source| CoreError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let pstr = path.display().to_string();
        let mut times: Vec<f64> = Vec::new();
        let mut speeds: Vec<f64> = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if idx == 0 && line.starts_with("t_s") {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 2 {
                return Err(CoreError::Parse {
                    path: pstr,
                    line: idx + 1,
                    msg: format!("expected 2 fields, got {}", fields.len()),
                });
            }
            let t: f64 = fields[0].trim().parse().map_err(|_| CoreError::Parse {
                path: pstr.clone(),
                line: idx + 1,
                msg: format!("bad time {:?}", fields[0]),
            })?;
            let v: f64 = fields[1].trim().parse().map_err(|_| CoreError::Parse {
                path: pstr.clone(),
                line: idx + 1,
                msg: format!("bad speed {:?}", fields[1]),
            })?;
            if let Some(&prev) = times.last() {
                if t <= prev {
                    return Err(CoreError::Parse {
                        path: pstr,
                        line: idx + 1,
                        msg: format!("time {t} not strictly increasing (previous {prev})"),
                    });
                }
            }
            if v < 0.0 {
                return Err(CoreError::Parse {
                    path: pstr,
                    line: idx + 1,
                    msg: format!("negative speed {v}"),
                });
            }
            times.push(t);
            speeds.push(match unit {
                SpeedUnit::Kmh => v / 3.6,
                SpeedUnit::Ms => v,
            });
        }
        if times.len() < 2 {
            return Err(CoreError::Parse {
                path: pstr,
                line: 0,
                msg: "need at least two samples".into(),
            });
        }
        // resample to 1 Hz over [t0, tN]
        let t0 = times[0];
        let t_end = *times.last().unwrap();
        let n = ((t_end - t0).floor() as usize) + 1;
        let mut out = Vec::with_capacity(n);
        let mut seg = 0usize;
        for k in 0..n {
            let t = t0 + k as f64;
            while seg + 1 < times.len() - 1 && times[seg + 1] <= t {
                seg += 1;
            }
            let (ta, tb) = (times[seg], times[seg + 1]);
            let f = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
            out.push(speeds[seg] + (speeds[seg + 1] - speeds[seg]) * f);
        }
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "cycle".into());
        DriveCycle::from_speeds(name, out)
    }

    /// Serialize as a `t_s,v` CSV in m/s at 1 Hz.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_s,v\n");
        for (t, v) in self.speeds.iter().enumerate() {
            out.push_str(&format!("{t},{v}\n"));
        }
        out
    }
}

/// Deterministic 300 s synthetic cycle: a leading stand, a hard launch, a
/// tapering climb to ~30 m/s whose demand stays moderate at speed, a long
/// high-speed cruise, and braking to rest. The seed perturbs the cruise speed
/// slightly; identical output for identical seeds on every platform.
pub fn synth_cycle(seed: u64) -> DriveCycle {
    let s = splitmix(seed);
    let j1 = (s % 1000) as f64 / 1000.0;
    let cruise = 30.0 - 0.2 * j1;

    let mut v = 0.0_f64;
    let mut speeds = vec![0.0; 4];
    // the launch stays within series-generation reach until the wheel-coupled
    // engine path becomes available (~12.65 m/s), so a floor-start remains
    // supportable; above that the climb eases off as drag builds
    let ramps: [(f64, f64); 8] = [
        (6.7, 1.2),
        (12.6, 0.5),
        (16.5, 0.21),
        (20.0, 0.2),
        (23.0, 0.17),
        (26.0, 0.135),
        (28.5, 0.105),
        (cruise, 0.082),
    ];
    for (target, a) in ramps {
        while v < target.min(cruise) - 1e-9 && speeds.len() < 280 {
            v = (v + a).min(target.min(cruise));
            speeds.push(v);
        }
    }
    // cruise until the braking window opens; the trailing stand keeps the
    // profile inside a 300-sample box
    while speeds.len() < 300 - 17 {
        speeds.push(v);
    }
    // brake to rest
    while v > 0.0 && speeds.len() < 300 {
        v = (v - 2.2).max(0.0);
        speeds.push(v);
    }
    while speeds.len() < 300 {
        speeds.push(0.0);
    }
    speeds.truncate(300);
    let n = speeds.len();
    if speeds[n - 1] != 0.0 {
        speeds[n - 1] = 0.0;
    }

    DriveCycle::from_speeds(format!("synth-{seed}"), speeds).expect("synthetic cycle is valid")
}

fn splitmix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synth_starts_and_ends_at_rest() {
        let c = synth_cycle(0);
        assert_eq!(c.len(), 300);
        assert_eq!(c.speeds[0], 0.0);
        assert_eq!(*c.speeds.last().unwrap(), 0.0);
    }

    #[test]
    fn synth_accel_bounded() {
        let c = synth_cycle(0);
        for t in 0..c.steps() {
            assert!(c.accel(t).abs() <= 2.5 + 1e-12);
        }
    }

    #[test]
    fn synth_is_deterministic_per_seed() {
        assert_eq!(synth_cycle(7), synth_cycle(7));
        assert_ne!(synth_cycle(0).speeds, synth_cycle(1).speeds);
    }

    #[test]
    fn synth_seed_zero_reference_checksum() {
        // frozen reference for the canonical cycle: any change to the profile
        // is a deliberate, test-visible event
        let c = synth_cycle(0);
        let sum: f64 = c.speeds.iter().sum();
        let mut h: u64 = 0xcbf29ce484222325;
        for v in &c.speeds {
            for b in v.to_bits().to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x100000001b3);
            }
        }
        assert_eq!(c.len(), 300);
        assert!((sum - 7295.215000000004).abs() < 1e-9, "sum {sum}");
        assert_eq!(h, 0xb9cca125bcfc3d0d, "fnv {h:016x}");
    }

    #[test]
    fn repeat_identity_and_triple() {
        let c = synth_cycle(0);
        assert_eq!(c.repeat(1).unwrap().speeds, c.speeds);
        let r = c.repeat(3).unwrap();
        assert_eq!(r.len(), 900);
        assert_eq!(r.repeats, 3);
        // splice acceleration at the joints is exactly zero
        assert_eq!(r.speeds[299], 0.0);
        assert_eq!(r.speeds[300], 0.0);
        assert_eq!(r.accel(299), 0.0);
    }

    #[test]
    fn accel_telescopes_to_speed_delta() {
        let c = synth_cycle(3);
        let sum: f64 = (0..c.steps()).map(|t| c.accel(t) * c.dt).sum();
        assert!((sum - (c.speeds[c.len() - 1] - c.speeds[0])).abs() < 1e-9);
    }

    #[test]
    fn kmh_conversion_on_load() {
        let dir = std::env::temp_dir().join("phev_core_cycle_kmh");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.csv");
        std::fs::write(&path, "t_s,v\n0,0\n1,14.4\n2,28.8\n").unwrap();
        let c = DriveCycle::load_csv(&path, SpeedUnit::Kmh).unwrap();
        assert_eq!(c.speeds, vec![0.0, 4.0, 8.0]);
    }

    #[test]
    fn half_hz_file_interpolates_midpoints() {
        let dir = std::env::temp_dir().join("phev_core_cycle_halfhz");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.csv");
        // 0.5 Hz: samples every 2 s; 1 Hz resampling lands halfway
        std::fs::write(&path, "t_s,v\n0,0\n2,4\n4,6\n").unwrap();
        let c = DriveCycle::load_csv(&path, SpeedUnit::Ms).unwrap();
        assert_eq!(c.speeds, vec![0.0, 2.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn load_errors_name_lines() {
        let dir = std::env::temp_dir().join("phev_core_cycle_bad");
        std::fs::create_dir_all(&dir).unwrap();
        let bad_time = dir.join("t.csv");
        std::fs::write(&bad_time, "t_s,v\n0,0\n0,1\n").unwrap();
        let err = DriveCycle::load_csv(&bad_time, SpeedUnit::Ms).unwrap_err();
        assert!(err.to_string().contains(":3:"), "{err}");

        let bad_speed = dir.join("v.csv");
        std::fs::write(&bad_speed, "t_s,v\n0,0\n1,-3\n").unwrap();
        let err = DriveCycle::load_csv(&bad_speed, SpeedUnit::Ms).unwrap_err();
        assert!(err.to_string().contains("negative speed"), "{err}");
    }

    #[test]
    fn save_load_round_trip_is_lossless() {
        let c = synth_cycle(0);
        let dir = std::env::temp_dir().join("phev_core_cycle_rt");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("rt.csv");
        std::fs::write(&path, c.to_csv()).unwrap();
        let c2 = DriveCycle::load_csv(&path, SpeedUnit::Ms).unwrap();
        assert_eq!(c.speeds, c2.speeds);
    }
}
