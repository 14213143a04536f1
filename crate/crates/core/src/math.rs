//! Frame conventions and rotation algebra.
//!
//! - Navigation frame: NED (north, east, down).
//! - Body frame: FRD (front, right, down).
//! - Quaternions are scalar-first and rotate body vectors into the navigation
//!   frame, `v_n = q ⊗ v_b ⊗ q*`.
//! - Euler angles use the aerospace Z-Y-X sequence, `C_b^n = Rz(yaw)·Ry(pitch)·Rx(roll)`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::ops::Mul;

use nalgebra::Matrix3;

pub type Vector3 = nalgebra::Vector3<f64>;

/// Pitch distance from ±90° below which the roll/yaw split is degenerate.
pub const GIMBAL_LOCK_TOLERANCE: f64 = 1e-6;

/// Below this rotation angle the rotation-vector conversions switch to series.
const SMALL_ANGLE: f64 = 1e-6;

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_yaw(angle: f64) -> f64 {
    let wrapped = angle.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs.
    if wrapped >= TAU {
        0.0
    } else {
        wrapped
    }
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_pi(angle: f64) -> f64 {
    let wrapped = (angle + PI).rem_euclid(TAU) - PI;
    if wrapped <= -PI {
        wrapped + TAU
    } else {
        wrapped
    }
}

/// Roll, pitch and yaw in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EulerAngles {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl EulerAngles {
    pub const fn new(roll: f64, pitch: f64, yaw: f64) -> Self {
        Self { roll, pitch, yaw }
    }

    pub fn from_degrees(roll: f64, pitch: f64, yaw: f64) -> Self {
        Self::new(roll.to_radians(), pitch.to_radians(), yaw.to_radians())
    }

    /// Brings the angles into their canonical ranges: roll in `(−π, π]`,
    /// yaw in `[0, 2π)`. Pitch is left alone.
    pub fn normalized(self) -> Self {
        Self::new(wrap_pi(self.roll), self.pitch, wrap_yaw(self.yaw))
    }

    pub fn to_quaternion(self) -> Quaternion {
        Quaternion::from_euler(self)
    }

    pub fn is_finite(&self) -> bool {
        self.roll.is_finite() && self.pitch.is_finite() && self.yaw.is_finite()
    }
}

/// Direction cosine matrix `C_b^n`, mapping body vectors into the navigation frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dcm(Matrix3<f64>);

impl Dcm {
    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// Wraps a raw matrix. The caller is responsible for orthonormality.
    pub fn from_matrix_unchecked(m: Matrix3<f64>) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    /// `C_n^b`, the navigation-to-body rotation.
    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn body_to_nav(&self, v: &Vector3) -> Vector3 {
        self.0 * v
    }

    pub fn nav_to_body(&self, v: &Vector3) -> Vector3 {
        self.0.tr_mul(v)
    }
}

impl Mul for Dcm {
    type Output = Dcm;

    fn mul(self, rhs: Dcm) -> Dcm {
        Dcm(self.0 * rhs.0)
    }
}

/// Unit quaternion, scalar first, body→navigation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Default for Quaternion {
    fn default() -> Self {
        Self::identity()
    }
}

impl Quaternion {
    pub const fn identity() -> Self {
        Self {
            w: 1.0,
            x: 0.0,
            y: 0.0,
            z: 0.0,
        }
    }

    /// Builds a unit quaternion from arbitrary components. Returns `None` for
    /// a zero or non-finite input.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Option<Self> {
        let raw = Self { w, x, y, z };
        let n = raw.norm();
        if !n.is_finite() || n == 0.0 {
            return None;
        }
        Some(raw.scaled(1.0 / n).canonical())
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    fn scaled(self, s: f64) -> Self {
        Self {
            w: self.w * s,
            x: self.x * s,
            y: self.y * s,
            z: self.z * s,
        }
    }

    fn renormalized(self) -> Self {
        self.scaled(1.0 / self.norm())
    }

    /// Same rotation with a non-negative scalar part.
    pub fn canonical(self) -> Self {
        if self.w < 0.0 {
            self.scaled(-1.0)
        } else {
            self
        }
    }

    pub fn conjugate(&self) -> Self {
        Self {
            w: self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    pub fn vector(&self) -> Vector3 {
        Vector3::new(self.x, self.y, self.z)
    }

    /// Hamilton product `self ⊗ rhs`, renormalized.
    pub fn multiply(&self, rhs: &Quaternion) -> Quaternion {
        let (a, b) = (self, rhs);
        Quaternion {
            w: a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            x: a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            y: a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            z: a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        }
        .renormalized()
        .canonical()
    }

    /// Unit quaternion of a rotation vector (axis times angle, radians).
    pub fn from_rotation_vector(v: &Vector3) -> Quaternion {
        let angle = v.norm();
        // sin(θ/2)/θ, with its Taylor series near zero.
        let k = if angle < SMALL_ANGLE {
            0.5 - angle * angle / 48.0
        } else {
            (0.5 * angle).sin() / angle
        };
        Quaternion {
            w: (0.5 * angle).cos(),
            x: k * v.x,
            y: k * v.y,
            z: k * v.z,
        }
        .renormalized()
        .canonical()
    }

    /// Inverse of [`Quaternion::from_rotation_vector`]; the returned angle is in `[0, π]`.
    pub fn to_rotation_vector(&self) -> Vector3 {
        let q = self.canonical();
        let v = q.vector();
        let n = v.norm();
        if n < SMALL_ANGLE {
            // 2·atan2(n, w)/n → 2/w as n → 0
            v * (2.0 / q.w)
        } else {
            v * (2.0 * n.atan2(q.w) / n)
        }
    }

    pub fn from_euler(e: EulerAngles) -> Quaternion {
        let (sr, cr) = (0.5 * e.roll).sin_cos();
        let (sp, cp) = (0.5 * e.pitch).sin_cos();
        let (sy, cy) = (0.5 * e.yaw).sin_cos();
        Quaternion {
            w: cr * cp * cy + sr * sp * sy,
            x: sr * cp * cy - cr * sp * sy,
            y: cr * sp * cy + sr * cp * sy,
            z: cr * cp * sy - sr * sp * cy,
        }
        .renormalized()
        .canonical()
    }

    /// Z-Y-X Euler angles. At gimbal lock roll is reported as zero.
    pub fn to_euler(&self) -> EulerAngles {
        self.to_euler_flagged().0
    }

    /// Like [`Quaternion::to_euler`], also reporting whether pitch is within
    /// [`GIMBAL_LOCK_TOLERANCE`] of ±90°.
    pub fn to_euler_flagged(&self) -> (EulerAngles, bool) {
        let Quaternion { w, x, y, z } = *self;
        let sin_pitch = (2.0 * (w * y - z * x)).clamp(-1.0, 1.0);
        let pitch = sin_pitch.asin();
        if FRAC_PI_2 - pitch.abs() < GIMBAL_LOCK_TOLERANCE {
            // Only yaw ∓ roll is observable; pin roll to zero.
            let c11 = 1.0 - 2.0 * (x * x + z * z);
            let c12 = 2.0 * (y * z - w * x);
            let yaw = if pitch > 0.0 {
                c12.atan2(c11)
            } else {
                (-c12).atan2(c11)
            };
            return (EulerAngles::new(0.0, pitch, wrap_yaw(yaw)), true);
        }
        let roll = (2.0 * (w * x + y * z)).atan2(1.0 - 2.0 * (x * x + y * y));
        let yaw = (2.0 * (w * z + x * y)).atan2(1.0 - 2.0 * (y * y + z * z));
        (EulerAngles::new(wrap_pi(roll), pitch, wrap_yaw(yaw)), false)
    }

    pub fn to_dcm(&self) -> Dcm {
        let Quaternion { w, x, y, z } = *self;
        Dcm(Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ))
    }

    /// Rotates a body-frame vector into the navigation frame.
    pub fn rotate(&self, v: &Vector3) -> Vector3 {
        self.to_dcm().body_to_nav(v)
    }

    /// Smallest rotation angle separating two attitudes, radians.
    pub fn angle_to(&self, other: &Quaternion) -> f64 {
        self.conjugate().multiply(other).to_rotation_vector().norm()
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;

    fn mul(self, rhs: Quaternion) -> Quaternion {
        self.multiply(&rhs)
    }
}
