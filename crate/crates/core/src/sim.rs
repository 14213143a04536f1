//! Synthetic IMU/magnetometer data with ground truth.
//!
//! Truth attitude is integrated exactly from piecewise-constant body rates.
//! Gyro readings are the exact per-interval rotation increment divided by the
//! interval, so a noise-free, bias-free stream reproduces the truth exactly
//! when integrated sample by sample.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::math::{EulerAngles, Quaternion, Vector3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    /// s
    pub duration: f64,
    /// Body angular rate, rad/s.
    pub rate: Vector3,
    /// Body-frame kinematic acceleration, m/s².
    pub lin_accel: Vector3,
}

impl Segment {
    pub fn hold(duration: f64) -> Self {
        Self {
            duration,
            rate: Vector3::zeros(),
            lin_accel: Vector3::zeros(),
        }
    }

    pub fn rotate(duration: f64, rate: Vector3) -> Self {
        Self {
            duration,
            rate,
            lin_accel: Vector3::zeros(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySpec {
    pub initial: EulerAngles,
    pub segments: Vec<Segment>,
}

impl TrajectorySpec {
    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::Domain("trajectory has no segments".into()));
        }
        if !self.initial.is_finite() {
            return Err(Error::NonFinite("initial attitude"));
        }
        for (i, s) in self.segments.iter().enumerate() {
            if !(s.duration > 0.0 && s.duration.is_finite()) {
                return Err(Error::Domain(format!(
                    "segment {i}: duration must be > 0, got {}",
                    s.duration
                )));
            }
            if !s
                .rate
                .iter()
                .chain(s.lin_accel.iter())
                .all(|v| v.is_finite())
            {
                return Err(Error::Domain(format!(
                    "segment {i}: non-finite rate or acceleration"
                )));
            }
        }
        Ok(())
    }

    /// Starting time and attitude of every segment.
    fn segment_starts(&self) -> Vec<(f64, Quaternion)> {
        let mut out = Vec::with_capacity(self.segments.len());
        let mut t = 0.0;
        let mut q = self.initial.to_quaternion();
        for s in &self.segments {
            out.push((t, q));
            q = q * Quaternion::from_rotation_vector(&(s.rate * s.duration));
            t += s.duration;
        }
        out
    }

    fn segment_index(&self, starts: &[(f64, Quaternion)], t: f64) -> usize {
        starts.partition_point(|(t0, _)| *t0 <= t).saturating_sub(1)
    }

    /// Truth attitude at time `t` (clamped to the last segment).
    pub fn attitude_at(&self, t: f64) -> Quaternion {
        let starts = self.segment_starts();
        self.attitude_with(&starts, t)
    }

    fn attitude_with(&self, starts: &[(f64, Quaternion)], t: f64) -> Quaternion {
        let i = self.segment_index(starts, t);
        let (t0, q0) = starts[i];
        q0 * Quaternion::from_rotation_vector(&(self.segments[i].rate * (t - t0)))
    }

    fn segment_at(&self, starts: &[(f64, Quaternion)], t: f64) -> &Segment {
        &self.segments[self.segment_index(starts, t)]
    }

    /// The benchmark flight: hover, roll doublet, pitch doublet, 90° yaw
    /// turn, a forward-acceleration burst, then hover to 120 s.
    pub fn benchmark() -> Self {
        let d = |deg: f64| deg.to_radians();
        let roll = |r: f64| Vector3::new(d(r), 0.0, 0.0);
        let pitch = |r: f64| Vector3::new(0.0, d(r), 0.0);
        let segments = vec![
            Segment::hold(10.0),
            // roll doublet: 0 → +20 → −20 → 0
            Segment::rotate(1.0, roll(20.0)),
            Segment::hold(3.0),
            Segment::rotate(2.0, roll(-20.0)),
            Segment::hold(3.0),
            Segment::rotate(1.0, roll(20.0)),
            Segment::hold(10.0),
            // pitch doublet
            Segment::rotate(1.0, pitch(20.0)),
            Segment::hold(3.0),
            Segment::rotate(2.0, pitch(-20.0)),
            Segment::hold(3.0),
            Segment::rotate(1.0, pitch(20.0)),
            Segment::hold(10.0),
            // 90° yaw turn
            Segment::rotate(6.0, Vector3::new(0.0, 0.0, d(15.0))),
            Segment::hold(14.0),
            // forward acceleration burst
            Segment {
                duration: BENCHMARK_ACCEL_DURATION,
                rate: Vector3::zeros(),
                lin_accel: Vector3::new(3.0, 0.0, 0.0),
            },
            Segment::hold(120.0 - BENCHMARK_ACCEL_START - BENCHMARK_ACCEL_DURATION),
        ];
        Self {
            initial: EulerAngles::default(),
            segments,
        }
    }

    /// Static attitude held for `duration` seconds.
    pub fn stationary(attitude: EulerAngles, duration: f64) -> Self {
        Self {
            initial: attitude,
            segments: vec![Segment::hold(duration)],
        }
    }
}

/// Start of the benchmark's forward-acceleration segment, s.
pub const BENCHMARK_ACCEL_START: f64 = 70.0;
/// Length of the benchmark's forward-acceleration segment, s.
pub const BENCHMARK_ACCEL_DURATION: f64 = 8.0;

/// Gyro error model: constant bias + first-order Gauss-Markov drift + white noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GyroModel {
    pub constant_bias: Vector3,
    /// Markov correlation time, s.
    pub tau_g: f64,
    /// Markov driving noise, rad/s/√s.
    pub markov_sigma: f64,
    /// White noise density, rad/s/√Hz.
    pub white_density: f64,
}

/// MPU6050 rate noise density, 0.005 °/s/√Hz.
const MPU6050_GYRO_DENSITY: f64 = 0.005 * std::f64::consts::PI / 180.0;

impl Default for GyroModel {
    /// MPU6050-class gyro: datasheet white noise, and a drift whose stationary
    /// spread (σ·√(τ/2) = 1e-4 rad/s, about 20°/h) is typical for the part.
    fn default() -> Self {
        Self {
            constant_bias: Vector3::zeros(),
            tau_g: 100.0,
            markov_sigma: 1e-4 * (2.0f64 / 100.0).sqrt(),
            white_density: MPU6050_GYRO_DENSITY,
        }
    }
}

impl GyroModel {
    pub fn noiseless() -> Self {
        Self {
            markov_sigma: 0.0,
            white_density: 0.0,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccelModel {
    /// m/s²/√Hz
    pub white_density: f64,
    pub gravity: f64,
}

impl Default for AccelModel {
    fn default() -> Self {
        Self {
            white_density: 0.02,
            gravity: 9.81,
        }
    }
}

impl AccelModel {
    pub fn noiseless() -> Self {
        Self {
            white_density: 0.0,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagModel {
    /// Unit field direction in NED.
    pub field: Vector3,
    /// Per-axis white noise density on the unit field, 1/√Hz.
    pub white_density: f64,
    /// Magnetometer sample rate; `None` samples at every IMU epoch.
    pub rate_hz: Option<f64>,
}

impl Default for MagModel {
    fn default() -> Self {
        let dip = 60f64.to_radians();
        Self {
            field: Vector3::new(dip.cos(), 0.0, dip.sin()),
            white_density: 0.005,
            rate_hz: None,
        }
    }
}

impl MagModel {
    pub fn noiseless() -> Self {
        Self {
            white_density: 0.0,
            ..Self::default()
        }
    }
}

/// One timestamped sample. A zero `mag` means no magnetometer sample this epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorRecord {
    pub t: f64,
    pub gyro: Vector3,
    pub accel: Vector3,
    pub mag: Vector3,
    pub truth: Option<EulerAngles>,
}

impl SensorRecord {
    pub fn has_mag(&self) -> bool {
        self.mag != Vector3::zeros()
    }
}

/// Simulator output with the internal truth kept alongside the records.
#[derive(Debug, Clone)]
pub struct SimRun {
    pub records: Vec<SensorRecord>,
    pub truth: Vec<Quaternion>,
    /// Total gyro bias (constant + Markov) at each sample, rad/s.
    pub gyro_bias: Vec<Vector3>,
}

pub fn simulate(
    traj: &TrajectorySpec,
    gyro: &GyroModel,
    accel: &AccelModel,
    mag: &MagModel,
    rate_hz: f64,
    seed: u64,
) -> Result<Vec<SensorRecord>> {
    Ok(simulate_detailed(traj, gyro, accel, mag, rate_hz, seed)?.records)
}

fn gaussian(rng: &mut ChaCha8Rng, sigma: f64) -> Vector3 {
    if sigma == 0.0 {
        return Vector3::zeros();
    }
    let mut draw = || -> f64 { StandardNormal.sample(rng) };
    Vector3::new(draw(), draw(), draw()) * sigma
}

fn validate_models(
    gyro: &GyroModel,
    accel: &AccelModel,
    mag: &MagModel,
    rate_hz: f64,
) -> Result<()> {
    if !(rate_hz > 0.0 && rate_hz.is_finite()) {
        return Err(Error::Domain(format!(
            "sample rate must be > 0, got {rate_hz}"
        )));
    }
    let nonneg = |v: f64| v >= 0.0 && v.is_finite();
    if !(gyro.tau_g > 0.0
        && nonneg(gyro.markov_sigma)
        && nonneg(gyro.white_density)
        && gyro.constant_bias.iter().all(|v| v.is_finite()))
    {
        return Err(Error::Domain("invalid gyro model".into()));
    }
    if !(nonneg(accel.white_density) && accel.gravity > 0.0) {
        return Err(Error::Domain("invalid accel model".into()));
    }
    if !(nonneg(mag.white_density) && mag.field.xy().norm() > 0.0) {
        return Err(Error::Domain(
            "invalid mag model: field needs a horizontal component".into(),
        ));
    }
    if let Some(r) = mag.rate_hz {
        if !(r > 0.0 && r <= rate_hz) {
            return Err(Error::Domain(format!(
                "mag rate must be in (0, {rate_hz}], got {r}"
            )));
        }
    }
    Ok(())
}

pub fn simulate_detailed(
    traj: &TrajectorySpec,
    gyro_model: &GyroModel,
    accel_model: &AccelModel,
    mag_model: &MagModel,
    rate_hz: f64,
    seed: u64,
) -> Result<SimRun> {
    traj.validate()?;
    validate_models(gyro_model, accel_model, mag_model, rate_hz)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dt = 1.0 / rate_hz;
    let n = (traj.duration() * rate_hz + 1e-9).floor() as usize + 1;
    let starts = traj.segment_starts();
    let field = mag_model.field.normalize();

    let gyro_sigma = gyro_model.white_density * rate_hz.sqrt();
    let accel_sigma = accel_model.white_density * rate_hz.sqrt();
    let mag_sigma = mag_model.white_density * mag_model.rate_hz.unwrap_or(rate_hz).sqrt();
    let markov_step = gyro_model.markov_sigma * dt.sqrt();
    let markov_decay = 1.0 - dt / gyro_model.tau_g;
    let gravity = Vector3::new(0.0, 0.0, accel_model.gravity);

    let mut run = SimRun {
        records: Vec::with_capacity(n),
        truth: Vec::with_capacity(n),
        gyro_bias: Vec::with_capacity(n),
    };
    let mut markov = Vector3::zeros();
    let mut prev_q: Option<Quaternion> = None;

    for k in 0..n {
        let t = k as f64 * dt;
        let q = traj.attitude_with(&starts, t);
        let segment = traj.segment_at(&starts, t);

        if k > 0 {
            markov = markov * markov_decay + gaussian(&mut rng, markov_step);
        }
        let true_rate = match prev_q {
            Some(p) => p.conjugate().multiply(&q).to_rotation_vector() / dt,
            None => segment.rate,
        };
        let bias = gyro_model.constant_bias + markov;
        let gyro = true_rate + bias + gaussian(&mut rng, gyro_sigma);

        let dcm = q.to_dcm();
        let accel =
            dcm.nav_to_body(&(-gravity)) + segment.lin_accel + gaussian(&mut rng, accel_sigma);

        let mag_due = match mag_model.rate_hz {
            None => true,
            Some(r) => {
                k == 0 || ((t * r + 1e-9).floor() > (((k - 1) as f64 * dt) * r + 1e-9).floor())
            }
        };
        let mag = if mag_due {
            let m = dcm.nav_to_body(&field) + gaussian(&mut rng, mag_sigma);
            m.try_normalize(0.0).unwrap_or_else(Vector3::zeros)
        } else {
            Vector3::zeros()
        };

        run.records.push(SensorRecord {
            t,
            gyro,
            accel,
            mag,
            truth: Some(q.to_euler()),
        });
        run.truth.push(q);
        run.gyro_bias.push(bias);
        prev_q = Some(q);
    }
    Ok(run)
}
