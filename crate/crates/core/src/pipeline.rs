//! End-to-end fusion loop over a recorded or simulated sensor stream.
//!
//! Per IMU epoch (DLKF): propagate the attitude with the bias-compensated
//! gyro, convert accel/mag to measured angles, run the time update, the
//! accelerometer layer (when the gate passes), the magnetometer layer (when a
//! mag sample is due), then fold the error state back into the attitude and
//! bias accumulator.

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector2;

use crate::cf::CfState;
use crate::dlkf::{self, FilterState, NoiseConfig};
use crate::error::{Error, Result};
use crate::fasteuler::{accel_roll_pitch, mag_yaw, FastEulerConfig};
use crate::math::{wrap_pi, EulerAngles, Quaternion, Vector3};
use crate::propagator::PropagatorState;
use crate::sim::SensorRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Algorithm {
    #[default]
    Dlkf,
    Cf,
    GyroOnly,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Dlkf => "dlkf",
            Algorithm::Cf => "cf",
            Algorithm::GyroOnly => "gyro-only",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dlkf" => Ok(Algorithm::Dlkf),
            "cf" => Ok(Algorithm::Cf),
            "gyro-only" | "gyro" => Ok(Algorithm::GyroOnly),
            other => Err(Error::Config(format!(
                "unknown algorithm {other:?} (expected dlkf, cf or gyro-only)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub algorithm: Algorithm,
    pub noise: NoiseConfig,
    pub fast_euler: FastEulerConfig,
    pub cf_kp: f64,
    pub cf_ki: f64,
    /// Nominal IMU rate, Hz. Sets the tolerance of the mag schedule.
    pub imu_rate_hz: f64,
    /// Rate at which magnetometer samples are consumed, Hz.
    pub mag_rate_hz: f64,
    /// Length of the static window used for initial alignment, s. Zero aligns
    /// from the first sample only and does not seed the bias.
    pub alignment_s: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Dlkf,
            noise: NoiseConfig::default(),
            fast_euler: FastEulerConfig::default(),
            cf_kp: CfState::DEFAULT_KP,
            cf_ki: CfState::DEFAULT_KI,
            imu_rate_hz: 250.0,
            mag_rate_hz: 10.0,
            alignment_s: 1.0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.noise.validate()?;
        self.fast_euler.validate()?;
        if !(self.imu_rate_hz > 0.0 && self.imu_rate_hz.is_finite()) {
            return Err(Error::Config(format!(
                "imu_rate_hz must be > 0, got {}",
                self.imu_rate_hz
            )));
        }
        if !(self.mag_rate_hz > 0.0 && self.mag_rate_hz <= self.imu_rate_hz) {
            return Err(Error::Config(format!(
                "mag_rate_hz must be in (0, imu_rate_hz], got {}",
                self.mag_rate_hz
            )));
        }
        if !(self.alignment_s >= 0.0 && self.alignment_s.is_finite()) {
            return Err(Error::Config(format!(
                "alignment_s must be >= 0, got {}",
                self.alignment_s
            )));
        }
        if !(self.cf_kp >= 0.0 && self.cf_ki >= 0.0) {
            return Err(Error::Config("cf gains must be >= 0".into()));
        }
        Ok(())
    }
}

/// Output of one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeEstimate {
    pub t: f64,
    pub euler: EulerAngles,
    pub q: Quaternion,
    /// Gyro bias estimate, rad/s.
    pub bias: Vector3,
}

/// Initial attitude from a (nearly) static window and the mean gyro reading.
///
/// Fails when the accelerometer gate rejects more than half of the window.
pub fn initial_alignment(
    records: &[SensorRecord],
    cfg: &FastEulerConfig,
) -> Result<(Quaternion, Vector3)> {
    let total = records.len();
    if total == 0 {
        return Err(Error::Alignment {
            rejected: 0,
            total: 0,
        });
    }
    let passing: Vec<&SensorRecord> = records
        .iter()
        .filter(|r| cfg.passes_gate(&r.accel))
        .collect();
    let rejected = total - passing.len();
    if passing.is_empty() || 2 * rejected > total {
        return Err(Error::Alignment { rejected, total });
    }

    let mean_accel = passing.iter().map(|r| r.accel).sum::<Vector3>() / passing.len() as f64;
    let ungated = FastEulerConfig {
        accel_gate: f64::INFINITY,
        ..*cfg
    };
    let (roll, pitch) =
        accel_roll_pitch(&mean_accel, &ungated).ok_or(Error::Alignment { rejected, total })?;

    let mags: Vec<Vector3> = records
        .iter()
        .filter_map(|r| r.mag.try_normalize(0.0))
        .collect();
    let yaw = if mags.is_empty() {
        0.0
    } else {
        let mean = mags.iter().sum::<Vector3>() / mags.len() as f64;
        mag_yaw(&mean, roll, pitch).unwrap_or(0.0)
    };

    let bias = records.iter().map(|r| r.gyro).sum::<Vector3>() / total as f64;
    Ok((EulerAngles::new(roll, pitch, yaw).to_quaternion(), bias))
}

// One engine per pipeline, so the size gap between variants costs nothing.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone)]
enum Engine {
    Dlkf {
        prop: PropagatorState,
        fs: FilterState,
    },
    Cf(CfState),
    GyroOnly(PropagatorState),
}

/// Incremental fusion loop; feed it records in time order.
#[derive(Debug, Clone)]
pub struct Pipeline {
    cfg: PipelineConfig,
    engine: Engine,
    last_t: Option<f64>,
    mag_due: f64,
    held_mag: Vector3,
    last_gamma2: f64,
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig, q0: Quaternion, bias0: Vector3, t0: f64) -> Result<Self> {
        cfg.validate()?;
        let prop = PropagatorState::new(q0, bias0, t0);
        let engine = match cfg.algorithm {
            Algorithm::Dlkf => Engine::Dlkf {
                prop,
                fs: FilterState::new(cfg.noise.p0),
            },
            Algorithm::Cf => {
                let mut cf = CfState::new(q0, cfg.cf_kp, cfg.cf_ki)?;
                cf.integral_fb = -bias0;
                Engine::Cf(cf)
            }
            Algorithm::GyroOnly => Engine::GyroOnly(prop),
        };
        Ok(Self {
            cfg,
            engine,
            last_t: None,
            mag_due: t0,
            held_mag: Vector3::zeros(),
            last_gamma2: 1.0,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    /// Error-state filter, when running the DLKF.
    pub fn filter_state(&self) -> Option<&FilterState> {
        match &self.engine {
            Engine::Dlkf { fs, .. } => Some(fs),
            _ => None,
        }
    }

    /// Adaptive factor applied at the most recent accelerometer update.
    pub fn last_gamma2(&self) -> f64 {
        self.last_gamma2
    }

    pub fn estimate(&self) -> AttitudeEstimate {
        let (t, q, bias) = match &self.engine {
            Engine::Dlkf { prop, .. } | Engine::GyroOnly(prop) => (prop.t, prop.q, prop.bias),
            Engine::Cf(cf) => (self.last_t.unwrap_or(0.0), cf.q, cf.bias()),
        };
        let q = q.canonical();
        AttitudeEstimate {
            t: self.last_t.unwrap_or(t),
            euler: q.to_euler(),
            q,
            bias,
        }
    }

    /// Returns the fresh magnetometer sample for this epoch, if one is due.
    fn take_mag(&mut self, record: &SensorRecord) -> Option<Vector3> {
        if !record.has_mag() {
            return None;
        }
        let tolerance = 0.5 / self.cfg.imu_rate_hz;
        if record.t + tolerance < self.mag_due {
            return None;
        }
        let period = 1.0 / self.cfg.mag_rate_hz;
        while self.mag_due <= record.t + tolerance {
            self.mag_due += period;
        }
        Some(record.mag)
    }

    pub fn step(&mut self, record: &SensorRecord) -> Result<AttitudeEstimate> {
        if !(record.t.is_finite()) {
            return Err(Error::NonFinite("timestamp"));
        }
        let dt = match self.last_t {
            Some(prev) if record.t <= prev => {
                return Err(Error::UnorderedTimestamps {
                    index: 0,
                    previous: prev,
                    current: record.t,
                })
            }
            Some(prev) => Some(record.t - prev),
            None => None,
        };
        let fresh_mag = self.take_mag(record);
        if let Some(m) = fresh_mag {
            self.held_mag = m;
        }
        self.last_t = Some(record.t);
        let Some(dt) = dt else {
            return Ok(self.estimate());
        };

        let cfg = self.cfg;
        match &mut self.engine {
            Engine::GyroOnly(prop) => {
                *prop = prop.propagate(&record.gyro, dt)?;
            }
            Engine::Cf(cf) => {
                *cf = cf.update(&record.gyro, &record.accel, &self.held_mag, dt)?;
            }
            Engine::Dlkf { prop, fs } => {
                let propagated = prop.propagate(&record.gyro, dt)?;
                let gyro_euler = propagated.q.to_euler();
                let mut state = dlkf::time_update(fs, &gyro_euler, dt, &cfg.noise)?;

                let tilt = accel_roll_pitch(&record.accel, &cfg.fast_euler);
                if let Some((roll, pitch)) = tilt {
                    let z1 =
                        Vector2::new(wrap_pi(roll - gyro_euler.roll), pitch - gyro_euler.pitch);
                    self.last_gamma2 = dlkf::adaptive_gamma2(&record.accel, &cfg.noise);
                    let ra = dlkf::adaptive_ra(&record.accel, &cfg.noise);
                    state = dlkf::accel_update(&state, &z1, &ra)?;
                }

                if let Some(mag) = fresh_mag {
                    // Gated accel: tilt-compensate with the current estimate.
                    let (roll, pitch) = tilt
                        .unwrap_or((gyro_euler.roll + state.x[0], gyro_euler.pitch + state.x[1]));
                    if let Some(yaw) = mag_yaw(&mag, roll, pitch) {
                        let z2 = wrap_pi(yaw - gyro_euler.yaw);
                        state = dlkf::mag_update(&state, z2, cfg.noise.rm)?;
                    }
                }

                let (p, f) = dlkf::apply_correction(&propagated, &state);
                *prop = p;
                *fs = f;
            }
        }
        Ok(self.estimate())
    }
}

fn check_ordering(records: &[SensorRecord]) -> Result<()> {
    for (i, w) in records.windows(2).enumerate() {
        // Also rejects NaN timestamps.
        if w[1].t.partial_cmp(&w[0].t) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::UnorderedTimestamps {
                index: i + 1,
                previous: w[0].t,
                current: w[1].t,
            });
        }
    }
    Ok(())
}

/// Builds a pipeline positioned at the first record, aligned per `cfg`.
pub fn prepare(records: &[SensorRecord], cfg: &PipelineConfig) -> Result<Pipeline> {
    cfg.validate()?;
    let first = records
        .first()
        .ok_or_else(|| Error::Domain("no sensor records".into()))?;
    check_ordering(records)?;
    let (q0, bias0) = if cfg.alignment_s > 0.0 {
        let end = first.t + cfg.alignment_s;
        let n = records.partition_point(|r| r.t <= end).max(1);
        initial_alignment(&records[..n], &cfg.fast_euler)?
    } else {
        // No window to average: take the first record as is, even if a
        // noisy sample would fail the gate; the filter corrects from there.
        let ungated = FastEulerConfig {
            accel_gate: f64::INFINITY,
            ..cfg.fast_euler
        };
        let (q, _) = initial_alignment(&records[..1], &ungated)?;
        (q, Vector3::zeros())
    };
    Pipeline::new(*cfg, q0, bias0, first.t)
}

pub fn run_pipeline(
    records: &[SensorRecord],
    cfg: &PipelineConfig,
) -> Result<Vec<AttitudeEstimate>> {
    let mut pipeline = prepare(records, cfg)?;
    records
        .iter()
        .enumerate()
        .map(|(i, r)| pipeline.step(r).map_err(|e| e.at_sample(i)))
        .collect()
}
