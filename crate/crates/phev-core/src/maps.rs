//! Tabulated component maps: rectangular 2-D grids with bilinear interpolation
//! and 1-D breakpoint curves with linear interpolation.
//!
//! Queries outside a grid clamp to the boundary; operating-limit enforcement is
//! the caller's job, the maps themselves are total functions.

use std::fs;
use std::path::Path;

use crate::{rads_to_rpm, rpm_to_rads, CoreError, Result};

/// Rectangular grid over (speed, torque) with bilinear interpolation.
///
/// Axes are stored in SI units (rad/s, N·m). CSV ingestion converts the
/// `speed_rpm` column on the way in.
#[derive(Debug, Clone)]
pub struct Grid2d {
    speeds: Vec<f64>,
    torques: Vec<f64>,
    /// Row-major: `values[i * torques.len() + j]` for speed `i`, torque `j`.
    values: Vec<f64>,
}

impl Grid2d {
    pub fn new(speeds: Vec<f64>, torques: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if speeds.len() < 2 || torques.len() < 2 {
            return Err(CoreError::invalid("grid", "each axis needs ≥ 2 points"));
        }
        if values.len() != speeds.len() * torques.len() {
            return Err(CoreError::invalid(
                "grid",
                format!(
                    "value count {} does not match {}×{} grid",
                    values.len(),
                    speeds.len(),
                    torques.len()
                ),
            ));
        }
        if !strictly_increasing(&speeds) || !strictly_increasing(&torques) {
            return Err(CoreError::invalid("grid", "axes must be strictly increasing"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::invalid("grid", "non-finite value"));
        }
        Ok(Grid2d {
            speeds,
            torques,
            values,
        })
    }

    /// Sample an analytic surface onto a regular grid.
    pub fn from_fn(
        speeds: Vec<f64>,
        torques: Vec<f64>,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(speeds.len() * torques.len());
        for &w in &speeds {
            for &t in &torques {
                values.push(f(w, t));
            }
        }
        Grid2d::new(speeds, torques, values)
    }

    pub fn speeds(&self) -> &[f64] {
        &self.speeds
    }

    pub fn torques(&self) -> &[f64] {
        &self.torques
    }

    pub fn value_at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.torques.len() + j]
    }

    /// Bilinear interpolation with boundary clamping.
    pub fn interp(&self, speed: f64, torque: f64) -> f64 {
        let (i, fx) = locate(&self.speeds, speed);
        let (j, fy) = locate(&self.torques, torque);
        let n = self.torques.len();
        let v00 = self.values[i * n + j];
        let v01 = self.values[i * n + j + 1];
        let v10 = self.values[(i + 1) * n + j];
        let v11 = self.values[(i + 1) * n + j + 1];
        let a = v00 + (v01 - v00) * fy;
        let b = v10 + (v11 - v10) * fy;
        a + (b - a) * fx
    }

    /// Load from `speed_rpm,torque_nm,value` CSV. Rows must enumerate the full
    /// rectangular grid row-major (speed outer, torque inner), both axes
    /// strictly increasing.
    pub fn load_csv(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| CoreError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let pstr = path.display().to_string();
        let mut rows: Vec<(f64, f64, f64)> = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if idx == 0 {
                let header = line.replace(' ', "");
                if header != "speed_rpm,torque_nm,value" {
                    return Err(CoreError::Parse {
                        path: pstr,
                        line: 1,
                        msg: format!("expected header speed_rpm,torque_nm,value, got {line}"),
                    });
                }
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(CoreError::Parse {
                    path: pstr,
                    line: idx + 1,
                    msg: format!("expected 3 fields, got {}", fields.len()),
                });
            }
            let mut nums = [0.0_f64; 3];
            for (k, f) in fields.iter().enumerate() {
                nums[k] = f.trim().parse().map_err(|_| CoreError::Parse {
                    path: pstr.clone(),
                    line: idx + 1,
                    msg: format!("bad number {f:?}"),
                })?;
            }
            rows.push((nums[0], nums[1], nums[2]));
        }
        if rows.is_empty() {
            return Err(CoreError::Parse {
                path: pstr,
                line: 0,
                msg: "no data rows".into(),
            });
        }
        let mut speeds: Vec<f64> = Vec::new();
        let mut torques: Vec<f64> = Vec::new();
        for &(s, t, _) in &rows {
            if speeds.last() != Some(&s) {
                speeds.push(s);
            }
            if speeds.len() == 1 {
                torques.push(t);
            }
        }
        let values: Vec<f64> = rows.iter().map(|r| r.2).collect();
        if values.len() != speeds.len() * torques.len() {
            return Err(CoreError::Parse {
                path: pstr,
                line: 0,
                msg: "rows do not form a complete rectangular grid".into(),
            });
        }
        // verify torque axis repeats identically in each speed block
        let nt = torques.len();
        for (r, &(_, t, _)) in rows.iter().enumerate() {
            if (t - torques[r % nt]).abs() > 1e-12 {
                return Err(CoreError::Parse {
                    path: pstr,
                    line: r + 2,
                    msg: "torque axis differs between speed blocks".into(),
                });
            }
        }
        let speeds_si: Vec<f64> = speeds.iter().map(|&s| rpm_to_rads(s)).collect();
        Grid2d::new(speeds_si, torques, values)
    }

    /// Dump in the same CSV schema accepted by [`Grid2d::load_csv`].
    pub fn to_csv(&self) -> String {
        let mut out = String::from("speed_rpm,torque_nm,value\n");
        for (i, &w) in self.speeds.iter().enumerate() {
            for (j, &t) in self.torques.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{}\n",
                    rads_to_rpm(w),
                    t,
                    self.value_at(i, j)
                ));
            }
        }
        out
    }
}

/// 1-D breakpoint table with linear interpolation and boundary clamping.
#[derive(Debug, Clone)]
pub struct Curve1d {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Curve1d {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(CoreError::invalid("curve", "need ≥ 2 matched breakpoints"));
        }
        if !strictly_increasing(&xs) {
            return Err(CoreError::invalid("curve", "x axis must be strictly increasing"));
        }
        if ys.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::invalid("curve", "non-finite value"));
        }
        Ok(Curve1d { xs, ys })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn interp(&self, x: f64) -> f64 {
        let (i, f) = locate(&self.xs, x);
        self.ys[i] + (self.ys[i + 1] - self.ys[i]) * f
    }

    pub fn is_non_decreasing(&self) -> bool {
        self.ys.windows(2).all(|w| w[1] >= w[0])
    }

    pub fn is_non_increasing(&self) -> bool {
        self.ys.windows(2).all(|w| w[1] <= w[0])
    }
}

/// Bracket `x` in `axis`: returns (lower index, fraction in [0,1]), clamped.
fn locate(axis: &[f64], x: f64) -> (usize, f64) {
    let n = axis.len();
    if x <= axis[0] {
        return (0, 0.0);
    }
    if x >= axis[n - 1] {
        return (n - 2, 1.0);
    }
    // binary search for the bracketing interval
    let mut lo = 0usize;
    let mut hi = n - 1;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if axis[mid] <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    ((lo), (x - axis[lo]) / (axis[lo + 1] - axis[lo]))
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

/// Evenly spaced inclusive grid with `n ≥ 2` points.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "linspace needs at least two points");
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                lo + step * i as f64
            }
        })
        .collect()
}
