//! Gyro strapdown attitude integration with bias compensation.

use crate::error::{Error, Result};
use crate::math::{Quaternion, Vector3};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PropagatorState {
    /// Body→navigation attitude.
    pub q: Quaternion,
    /// Accumulated gyro bias estimate, rad/s. Subtracted from every gyro sample.
    pub bias: Vector3,
    /// Time of the last update, s.
    pub t: f64,
}

impl PropagatorState {
    pub fn new(q: Quaternion, bias: Vector3, t: f64) -> Self {
        Self { q, bias, t }
    }

    /// Advances the attitude by one gyro sample held constant over `dt`.
    pub fn propagate(&self, gyro: &Vector3, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidTimeStep(dt));
        }
        if !gyro.iter().all(|c| c.is_finite()) {
            return Err(Error::NonFinite("gyro"));
        }
        let increment = (gyro - self.bias) * dt;
        Ok(Self {
            q: self.q * Quaternion::from_rotation_vector(&increment),
            bias: self.bias,
            t: self.t + dt,
        })
    }
}
