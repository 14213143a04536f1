//! Direct conversion of accelerometer and magnetometer vectors into measured
//! roll, pitch and heading, with a gravity-norm outlier gate.
//!
//! Accelerometers report specific force in the FRD body frame, so a level,
//! static sensor reads `(0, 0, −g)`.

use crate::error::{Error, Result};
use crate::math::{wrap_yaw, Vector3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FastEulerConfig {
    /// Local gravity magnitude, m/s².
    pub gravity: f64,
    /// Maximum allowed `|‖accel‖ − g|`, m/s².
    pub accel_gate: f64,
}

impl Default for FastEulerConfig {
    fn default() -> Self {
        Self {
            gravity: 9.81,
            accel_gate: 0.5,
        }
    }
}

impl FastEulerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gravity > 0.0 && self.gravity.is_finite()) {
            return Err(Error::Config(format!(
                "gravity must be > 0, got {}",
                self.gravity
            )));
        }
        if !(self.accel_gate > 0.0 && self.accel_gate.is_finite()) {
            return Err(Error::Config(format!(
                "accel_gate must be > 0, got {}",
                self.accel_gate
            )));
        }
        Ok(())
    }

    /// True when the specific-force magnitude is close enough to gravity for
    /// the accelerometer to be trusted as a tilt sensor.
    pub fn passes_gate(&self, accel: &Vector3) -> bool {
        let n = accel.norm();
        n > 0.0 && (n - self.gravity).abs() <= self.accel_gate
    }
}

/// Measured angles for one epoch. Absent fields mean the layer is skipped.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MeasuredAngles {
    pub roll: Option<f64>,
    pub pitch: Option<f64>,
    pub yaw: Option<f64>,
}

/// Roll and pitch from specific force, or `None` when the gate rejects the sample.
///
/// Pitch uses `atan2(ax, −az)`, which is exact only at zero roll.
pub fn accel_roll_pitch(accel: &Vector3, cfg: &FastEulerConfig) -> Option<(f64, f64)> {
    if !accel.iter().all(|c| c.is_finite()) || !cfg.passes_gate(accel) {
        return None;
    }
    let roll = (-accel.y).atan2(-accel.z);
    let pitch = accel.x.atan2(-accel.z);
    Some((roll, pitch))
}

/// Tilt-compensated magnetic heading in `[0, 2π)`, or `None` for a zero field.
///
/// Only the direction of `mag` is used.
pub fn mag_yaw(mag: &Vector3, roll: f64, pitch: f64) -> Option<f64> {
    let n = mag.norm();
    if !(n > 0.0 && n.is_finite()) {
        return None;
    }
    let m = mag / n;
    let (sr, cr) = roll.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    let hx = m.x * cp + m.y * sp * sr + m.z * sp * cr;
    let hy = m.y * cr - m.z * sr;
    if hx == 0.0 && hy == 0.0 {
        // Field is vertical in the levelled frame; heading is undefined.
        return None;
    }
    Some(wrap_yaw((-hy).atan2(hx)))
}

/// Runs both steps for one epoch: roll/pitch from the accelerometer, then
/// heading tilt-compensated with those angles.
///
/// When the accelerometer is gated, `fallback_tilt` (typically the current
/// filter estimate) is used for tilt compensation instead.
pub fn fast_euler(
    accel: &Vector3,
    mag: &Vector3,
    fallback_tilt: Option<(f64, f64)>,
    cfg: &FastEulerConfig,
) -> MeasuredAngles {
    let tilt = accel_roll_pitch(accel, cfg);
    let yaw = tilt
        .or(fallback_tilt)
        .and_then(|(roll, pitch)| mag_yaw(mag, roll, pitch));
    MeasuredAngles {
        roll: tilt.map(|t| t.0),
        pitch: tilt.map(|t| t.1),
        yaw,
    }
}
