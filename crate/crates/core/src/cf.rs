//! Mahony-style passive complementary filter, used as the comparison baseline.

use crate::error::{Error, Result};
use crate::math::{Quaternion, Vector3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfState {
    pub q: Quaternion,
    /// Integral feedback term, rad/s. Converges to minus the gyro bias.
    pub integral_fb: Vector3,
    pub kp: f64,
    pub ki: f64,
}

impl CfState {
    pub const DEFAULT_KP: f64 = 1.0;
    pub const DEFAULT_KI: f64 = 0.05;

    pub fn new(q: Quaternion, kp: f64, ki: f64) -> Result<Self> {
        if !(kp >= 0.0 && kp.is_finite() && ki >= 0.0 && ki.is_finite()) {
            return Err(Error::Config(format!(
                "complementary gains must be >= 0, got kp={kp} ki={ki}"
            )));
        }
        Ok(Self {
            q,
            integral_fb: Vector3::zeros(),
            kp,
            ki,
        })
    }

    /// Current gyro bias estimate implied by the integral term.
    pub fn bias(&self) -> Vector3 {
        -self.integral_fb
    }

    /// Attitude error vector (body frame) between measured and predicted
    /// gravity and field directions. Zero-norm inputs contribute nothing.
    pub fn error_vector(&self, accel: &Vector3, mag: &Vector3) -> Vector3 {
        let dcm = self.q.to_dcm();
        let mut e = Vector3::zeros();

        if let Some(a) = accel.try_normalize(0.0) {
            // Specific force of a static sensor points along −z_n.
            let predicted = dcm.nav_to_body(&Vector3::new(0.0, 0.0, -1.0));
            e += a.cross(&predicted);
        }

        if let Some(m) = mag.try_normalize(0.0) {
            // Reference field: measured field in nav, folded into the north-down plane.
            let h = dcm.body_to_nav(&m);
            let b = Vector3::new(h.x.hypot(h.y), 0.0, h.z);
            let predicted = dcm.nav_to_body(&b);
            e += m.cross(&predicted);
        }
        e
    }

    pub fn update(&self, gyro: &Vector3, accel: &Vector3, mag: &Vector3, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidTimeStep(dt));
        }
        if !gyro
            .iter()
            .chain(accel.iter())
            .chain(mag.iter())
            .all(|v| v.is_finite())
        {
            return Err(Error::NonFinite("complementary filter input"));
        }
        // Compare the measurements with the attitude at their own epoch, i.e.
        // after this step's gyro rotation, not with the previous estimate.
        let predicted = Self {
            q: self.q * Quaternion::from_rotation_vector(&(gyro * dt)),
            ..*self
        };
        let e = predicted.error_vector(accel, mag);
        let integral_fb = if self.ki > 0.0 {
            self.integral_fb + e * (self.ki * dt)
        } else {
            self.integral_fb
        };
        let rate = gyro + e * self.kp + integral_fb;
        Ok(Self {
            q: self.q * Quaternion::from_rotation_vector(&(rate * dt)),
            integral_fb,
            ..*self
        })
    }
}
