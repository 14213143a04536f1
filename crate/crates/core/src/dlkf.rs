//! Six-state error-state Kalman filter with a two-layer measurement update.
//!
//! State layout:
//!
//! ```text
//!  [0..3]  attitude error (roll, pitch, yaw), rad, true minus estimated
//!  [3..6]  residual gyro bias, rad/s, reading minus current bias estimate
//! ```
//!
//! Layer one corrects roll/pitch from the accelerometer, layer two corrects
//! yaw from the magnetometer. Each layer consumes the previous layer's
//! output, so skipping one (gated accel, no fresh mag) is harmless.

use nalgebra::{Matrix2, Matrix3, SMatrix, SVector, Vector2};

use crate::error::{Error, Result};
use crate::math::{wrap_pi, EulerAngles, Quaternion, Vector3};
use crate::propagator::PropagatorState;

pub type Vector6 = SVector<f64, 6>;
pub type Matrix6 = SMatrix<f64, 6, 6>;

/// deg² → rad².
const DEG2_TO_RAD2: f64 = (std::f64::consts::PI / 180.0) * (std::f64::consts::PI / 180.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterState {
    pub x: Vector6,
    pub p: Matrix6,
}

impl FilterState {
    pub fn new(p0: Matrix6) -> Self {
        Self {
            x: Vector6::zeros(),
            p: p0,
        }
    }

    pub fn attitude_error(&self) -> Vector3 {
        self.x.fixed_rows::<3>(0).into_owned()
    }

    pub fn bias_error(&self) -> Vector3 {
        self.x.fixed_rows::<3>(3).into_owned()
    }

    /// Largest `|P − Pᵀ|` entry.
    pub fn asymmetry(&self) -> f64 {
        (self.p - self.p.transpose()).abs().max()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let sym = 0.5 * (self.p + self.p.transpose());
        sym.symmetric_eigenvalues().min()
    }

    fn check_finite(&self) -> Result<()> {
        if self.x.iter().chain(self.p.iter()).all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("filter state"))
        }
    }
}

/// Noise and model parameters. Covariances are stored in SI (rad², (rad/s)²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    /// Process noise added per time update.
    pub q: Matrix6,
    /// Accelerometer roll/pitch measurement noise before adaptive scaling.
    pub ra_nominal: Matrix2<f64>,
    /// Magnetometer heading measurement noise.
    pub rm: f64,
    /// Gauss-Markov correlation time of the gyro drift, s.
    pub tau_g: f64,
    /// Adaptive weight λ, (m/s²)⁻¹. Zero disables adaptation.
    pub lambda_a: f64,
    /// Upper clamp for the adaptive factor γ².
    pub gamma2_max: f64,
    /// Local gravity, m/s².
    pub gravity: f64,
    /// Initial covariance.
    pub p0: Matrix6,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        let q_deg2 = Vector6::new(0.1, 0.1, 0.1, 0.01, 0.01, 0.01) * 1e-4;
        Self {
            q: Matrix6::from_diagonal(&(q_deg2 * DEG2_TO_RAD2)),
            ra_nominal: Matrix2::from_diagonal(&Vector2::new(0.5, 5.0)) * DEG2_TO_RAD2,
            rm: 5.0 * DEG2_TO_RAD2,
            tau_g: 100.0,
            lambda_a: 5.0,
            gamma2_max: 100.0,
            gravity: 9.81,
            p0: Matrix6::identity(),
        }
    }
}

impl NoiseConfig {
    /// Converts a variance given in deg² (or (deg/s)²) to SI.
    pub fn deg2_to_rad2(v: f64) -> f64 {
        v * DEG2_TO_RAD2
    }

    pub fn rad2_to_deg2(v: f64) -> f64 {
        v / DEG2_TO_RAD2
    }

    pub fn validate(&self) -> Result<()> {
        let pd = |m: Matrix6| m.cholesky().is_some();
        if !pd(self.q) {
            return Err(Error::Config("Q must be positive definite".into()));
        }
        if self.ra_nominal.cholesky().is_none() {
            return Err(Error::Config("Ra must be positive definite".into()));
        }
        if !(self.rm > 0.0 && self.rm.is_finite()) {
            return Err(Error::Config(format!("Rm must be > 0, got {}", self.rm)));
        }
        if !(self.tau_g > 0.0 && self.tau_g.is_finite()) {
            return Err(Error::Config(format!(
                "tau_g must be > 0, got {}",
                self.tau_g
            )));
        }
        if !(self.lambda_a >= 0.0 && self.lambda_a.is_finite()) {
            return Err(Error::Config(format!(
                "lambda_a must be >= 0, got {}",
                self.lambda_a
            )));
        }
        if !(self.gamma2_max >= 1.0 && self.gamma2_max.is_finite()) {
            return Err(Error::Config(format!(
                "gamma2_max must be >= 1, got {}",
                self.gamma2_max
            )));
        }
        if !(self.gravity > 0.0 && self.gravity.is_finite()) {
            return Err(Error::Config(format!(
                "gravity must be > 0, got {}",
                self.gravity
            )));
        }
        if !pd(self.p0) {
            return Err(Error::Config("P0 must be positive definite".into()));
        }
        Ok(())
    }
}

const COS_PITCH_FLOOR: f64 = 1e-3;

/// Maps a body-frame rate error to Euler-angle error rates.
///
/// The attitude error states are Euler increments, so a residual gyro bias
/// drives them through the body-rate → Euler-rate kinematics rather than
/// through `C_b^n` directly (the two agree only at zero attitude). `cos θ` is
/// floored near ±90° pitch to keep the block finite.
pub fn bias_coupling(att: &EulerAngles) -> Matrix3<f64> {
    let (sr, cr) = att.roll.sin_cos();
    let (sp, cp) = att.pitch.sin_cos();
    let cp = if cp.abs() < COS_PITCH_FLOOR {
        COS_PITCH_FLOOR.copysign(cp)
    } else {
        cp
    };
    let tp = sp / cp;
    Matrix3::new(
        1.0,
        sr * tp,
        cr * tp, //
        0.0,
        cr,
        -sr, //
        0.0,
        sr / cp,
        cr / cp,
    )
}

/// Discrete transition matrix `I + dt·F` of the simplified error model.
pub fn transition(att: &EulerAngles, dt: f64, tau_g: f64) -> Matrix6 {
    let mut phi = Matrix6::identity();
    phi.fixed_view_mut::<3, 3>(0, 3)
        .copy_from(&(-bias_coupling(att) * dt));
    phi.fixed_view_mut::<3, 3>(3, 3)
        .copy_from(&(Matrix3::identity() * (1.0 - dt / tau_g)));
    phi
}

fn symmetrize(p: &Matrix6) -> Matrix6 {
    0.5 * (p + p.transpose())
}

/// Propagates the error state over `dt` about the current attitude estimate.
pub fn time_update(
    fs: &FilterState,
    att: &EulerAngles,
    dt: f64,
    cfg: &NoiseConfig,
) -> Result<FilterState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidTimeStep(dt));
    }
    if !att.is_finite() {
        return Err(Error::NonFinite("attitude"));
    }
    fs.check_finite()?;
    let phi = transition(att, dt, cfg.tau_g);
    Ok(FilterState {
        x: phi * fs.x,
        p: symmetrize(&(phi * fs.p * phi.transpose() + cfg.q)),
    })
}

/// Adaptive factor `γ² = clamp(λ·|‖a‖ − g|, 1, γ²_max)`.
pub fn adaptive_gamma2(accel: &Vector3, cfg: &NoiseConfig) -> f64 {
    let excess = (accel.norm() - cfg.gravity).abs();
    let g2 = cfg.lambda_a * excess;
    if g2.is_nan() {
        return cfg.gamma2_max;
    }
    g2.clamp(1.0, cfg.gamma2_max)
}

/// Accelerometer measurement noise scaled by the adaptive factor.
pub fn adaptive_ra(accel: &Vector3, cfg: &NoiseConfig) -> Matrix2<f64> {
    cfg.ra_nominal * adaptive_gamma2(accel, cfg)
}

/// Joseph-form Kalman update for an `M`-row linear measurement.
fn kalman_update<const M: usize>(
    fs: &FilterState,
    h: &SMatrix<f64, M, 6>,
    innovation: &SVector<f64, M>,
    r: &SMatrix<f64, M, M>,
) -> Result<FilterState> {
    let s = h * fs.p * h.transpose() + r;
    let chol = s.cholesky().ok_or(Error::SingularInnovation)?;
    // K = P Hᵀ S⁻¹, solved as S Kᵀ = H P.
    let k = chol.solve(&(h * fs.p)).transpose();
    let ikh = Matrix6::identity() - k * h;
    let p = ikh * fs.p * ikh.transpose() + k * r * k.transpose();
    Ok(FilterState {
        x: fs.x + k * innovation,
        p: symmetrize(&p),
    })
}

/// Layer one: roll/pitch correction. `z1` is measured minus propagated angles.
pub fn accel_update(fs: &FilterState, z1: &Vector2<f64>, ra: &Matrix2<f64>) -> Result<FilterState> {
    if !z1.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("accel measurement"));
    }
    if ra.cholesky().is_none() {
        return Err(Error::SingularInnovation);
    }
    let mut h = SMatrix::<f64, 2, 6>::zeros();
    h[(0, 0)] = 1.0;
    h[(1, 1)] = 1.0;
    let innovation = z1 - h * fs.x;
    kalman_update(fs, &h, &innovation, ra)
}

/// Layer two: heading correction. `z2` is measured minus propagated yaw; the
/// innovation is wrapped to `(−π, π]`.
pub fn mag_update(fs: &FilterState, z2: f64, rm: f64) -> Result<FilterState> {
    if !(rm > 0.0 && rm.is_finite()) {
        return Err(Error::InvalidNoise(rm));
    }
    if !z2.is_finite() {
        return Err(Error::NonFinite("mag measurement"));
    }
    let mut h = SMatrix::<f64, 1, 6>::zeros();
    h[(0, 2)] = 1.0;
    let innovation = SVector::<f64, 1>::new(wrap_pi(z2 - fs.x[2]));
    kalman_update(fs, &h, &innovation, &SMatrix::<f64, 1, 1>::new(rm))
}

/// Maps small Euler-angle increments to the equivalent navigation-frame
/// rotation vector at attitude `e`.
pub fn euler_increment_to_nav(e: &EulerAngles, d: &Vector3) -> Vector3 {
    let (sp, cp) = e.pitch.sin_cos();
    let (sy, cy) = e.yaw.sin_cos();
    // Columns: roll axis Rz·Ry·x̂, pitch axis Rz·ŷ, yaw axis ẑ.
    let roll_axis = Vector3::new(cy * cp, sy * cp, -sp);
    let pitch_axis = Vector3::new(-sy, cy, 0.0);
    let yaw_axis = Vector3::z();
    roll_axis * d.x + pitch_axis * d.y + yaw_axis * d.z
}

/// Feeds the estimated errors back into the propagator and resets the state.
///
/// The attitude is rotated so that, to first order, its Euler angles grow by
/// the estimated attitude error; the bias error is added to the bias
/// accumulator. Covariance is kept.
pub fn apply_correction(
    prop: &PropagatorState,
    fs: &FilterState,
) -> (PropagatorState, FilterState) {
    let d_att = fs.attitude_error();
    let d_bias = fs.bias_error();
    let q = if d_att == Vector3::zeros() {
        prop.q
    } else {
        let e = prop.q.to_euler();
        let rot = euler_increment_to_nav(&e, &d_att);
        Quaternion::from_rotation_vector(&rot) * prop.q
    };
    (
        PropagatorState {
            q,
            bias: prop.bias + d_bias,
            t: prop.t,
        },
        FilterState {
            x: Vector6::zeros(),
            p: fs.p,
        },
    )
}
