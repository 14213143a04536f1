//! File formats: sensor log CSV, estimate CSV, flat key-value pipeline config,
//! and the TOML scenario file consumed by the simulator.
//!
//! Sensor log header (truth columns optional):
//!
//! ```text
//! t,gx,gy,gz,ax,ay,az,mx,my,mz[,troll,tpitch,tyaw]
//! ```
//!
//! Units are SI: s, rad/s, m/s², unit-normalized field, rad. An all-zero
//! magnetometer triple marks an epoch without a magnetometer sample.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{Matrix2, Vector2};
use serde::Deserialize;

use crate::dlkf::{Matrix6, NoiseConfig, Vector6};
use crate::error::{Error, Result};
use crate::eval::Stamped;
use crate::math::{EulerAngles, Quaternion, Vector3};
use crate::pipeline::{AttitudeEstimate, PipelineConfig};
use crate::sim::{AccelModel, GyroModel, MagModel, Segment, SensorRecord, TrajectorySpec};

pub const LOG_HEADER: [&str; 10] = ["t", "gx", "gy", "gz", "ax", "ay", "az", "mx", "my", "mz"];
pub const TRUTH_HEADER: [&str; 3] = ["troll", "tpitch", "tyaw"];
pub const ESTIMATE_HEADER: [&str; 11] = [
    "t", "roll", "pitch", "yaw", "qw", "qx", "qy", "qz", "bx", "by", "bz",
];

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn parse_err(path: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        message: message.into(),
    }
}

fn parse_fields(record: &csv::StringRecord, line: u64, source: &str) -> Result<Vec<f64>> {
    record
        .iter()
        .enumerate()
        .map(|(i, field)| {
            field.trim().parse::<f64>().map_err(|_| {
                parse_err(
                    source,
                    format!("line {line}, column {}: bad number {field:?}", i + 1),
                )
            })
        })
        .collect()
}

fn v3(v: &[f64]) -> Vector3 {
    Vector3::new(v[0], v[1], v[2])
}

/// Writes a sensor log. Truth columns are emitted when every record has truth.
pub fn write_log<W: Write>(w: W, records: &[SensorRecord]) -> Result<()> {
    let with_truth = !records.is_empty() && records.iter().all(|r| r.truth.is_some());
    let mut out = writer(w);
    let mut header: Vec<&str> = LOG_HEADER.to_vec();
    if with_truth {
        header.extend(TRUTH_HEADER);
    }
    out.write_record(&header)?;
    for r in records {
        let mut row = vec![r.t];
        row.extend(r.gyro.iter().chain(r.accel.iter()).chain(r.mag.iter()));
        if let (true, Some(t)) = (with_truth, r.truth) {
            row.extend([t.roll, t.pitch, t.yaw]);
        }
        out.write_record(row.iter().map(|v| v.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_log<R: Read>(r: R, source: &str) -> Result<Vec<SensorRecord>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let full: Vec<&str> = LOG_HEADER
        .iter()
        .chain(TRUTH_HEADER.iter())
        .copied()
        .collect();
    let with_truth = if header == LOG_HEADER {
        false
    } else if header == full {
        true
    } else {
        return Err(parse_err(
            source,
            format!(
                "unexpected header {:?}, expected {}",
                header.join(","),
                full.join(",")
            ),
        ));
    };
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let line = i as u64 + 2;
        let v = parse_fields(&row, line, source)?;
        out.push(SensorRecord {
            t: v[0],
            gyro: v3(&v[1..4]),
            accel: v3(&v[4..7]),
            mag: v3(&v[7..10]),
            truth: with_truth.then(|| EulerAngles::new(v[10], v[11], v[12])),
        });
    }
    Ok(out)
}

pub fn write_estimates<W: Write>(w: W, estimates: &[AttitudeEstimate]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(ESTIMATE_HEADER)?;
    for e in estimates {
        let row = [
            e.t,
            e.euler.roll,
            e.euler.pitch,
            e.euler.yaw,
            e.q.w,
            e.q.x,
            e.q.y,
            e.q.z,
            e.bias.x,
            e.bias.y,
            e.bias.z,
        ];
        out.write_record(row.iter().map(|v| v.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_estimates<R: Read>(r: R, source: &str) -> Result<Vec<AttitudeEstimate>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header != ESTIMATE_HEADER {
        return Err(parse_err(
            source,
            format!(
                "unexpected header {:?}, expected {}",
                header.join(","),
                ESTIMATE_HEADER.join(",")
            ),
        ));
    }
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let v = parse_fields(&row?, i as u64 + 2, source)?;
        let q = Quaternion::new(v[4], v[5], v[6], v[7])
            .ok_or_else(|| parse_err(source, format!("line {}: zero quaternion", i + 2)))?;
        out.push(AttitudeEstimate {
            t: v[0],
            euler: EulerAngles::new(v[1], v[2], v[3]),
            q,
            bias: v3(&v[8..11]),
        });
    }
    Ok(out)
}

pub fn estimates_stamped(estimates: &[AttitudeEstimate]) -> Vec<Stamped> {
    estimates
        .iter()
        .map(|e| Stamped {
            t: e.t,
            angles: e.euler,
        })
        .collect()
}

/// Truth samples of a log; fails if the log carries no truth.
pub fn truth_stamped(records: &[SensorRecord], source: &str) -> Result<Vec<Stamped>> {
    records
        .iter()
        .map(|r| {
            r.truth
                .map(|angles| Stamped { t: r.t, angles })
                .ok_or_else(|| parse_err(source, "log has no truth columns"))
        })
        .collect()
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| parse_err(&path.display().to_string(), e.to_string()))
}

pub fn read_log_file(path: &Path) -> Result<Vec<SensorRecord>> {
    read_log(open(path)?, &path.display().to_string())
}

pub fn read_estimates_file(path: &Path) -> Result<Vec<AttitudeEstimate>> {
    read_estimates(open(path)?, &path.display().to_string())
}

// ---------------------------------------------------------------------------
// Pipeline config: `key = value` lines, `#` comments. Covariances in deg².
// ---------------------------------------------------------------------------

fn parse_list<const N: usize>(key: &str, value: &str) -> Result<[f64; N]> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != N {
        return Err(Error::Config(format!(
            "{key}: expected {N} comma-separated values"
        )));
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = parse_number(key, p)?;
    }
    Ok(out)
}

fn parse_number(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("{key}: bad number {value:?}")))
}

fn join(values: impl IntoIterator<Item = f64>) -> String {
    values
        .into_iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

pub fn parse_config(text: &str) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
        let num = || parse_number(key, value);
        match key {
            "algorithm" => cfg.algorithm = value.parse()?,
            "imu_rate_hz" => cfg.imu_rate_hz = num()?,
            "mag_rate_hz" => cfg.mag_rate_hz = num()?,
            "alignment_s" => cfg.alignment_s = num()?,
            "gravity" => {
                cfg.noise.gravity = num()?;
                cfg.fast_euler.gravity = cfg.noise.gravity;
            }
            "accel_gate" => cfg.fast_euler.accel_gate = num()?,
            "q_diag_deg2" => {
                let q = parse_list::<6>(key, value)?.map(NoiseConfig::deg2_to_rad2);
                cfg.noise.q = Matrix6::from_diagonal(&Vector6::from(q));
            }
            "p0_diag" => {
                cfg.noise.p0 = Matrix6::from_diagonal(&Vector6::from(parse_list::<6>(key, value)?));
            }
            "ra_deg2" => {
                let [r, p] = parse_list::<2>(key, value)?.map(NoiseConfig::deg2_to_rad2);
                cfg.noise.ra_nominal = Matrix2::from_diagonal(&Vector2::new(r, p));
            }
            "rm_deg2" => cfg.noise.rm = NoiseConfig::deg2_to_rad2(num()?),
            "tau_g" => cfg.noise.tau_g = num()?,
            "lambda_a" => cfg.noise.lambda_a = num()?,
            "gamma2_max" => cfg.noise.gamma2_max = num()?,
            "cf_kp" => cfg.cf_kp = num()?,
            "cf_ki" => cfg.cf_ki = num()?,
            other => {
                return Err(Error::Config(format!(
                    "line {}: unknown key {other:?}",
                    n + 1
                )));
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Inverse of [`parse_config`]. Off-diagonal covariance terms are not representable.
pub fn format_config(cfg: &PipelineConfig) -> String {
    let n = &cfg.noise;
    // Round away the last-bit noise of the deg² → rad² → deg² round trip.
    let to_deg2 = |v: f64| {
        let d = NoiseConfig::rad2_to_deg2(v);
        format!("{d:.12e}").parse::<f64>().unwrap_or(d)
    };
    [
        format!("algorithm = {}", cfg.algorithm),
        format!("imu_rate_hz = {}", cfg.imu_rate_hz),
        format!("mag_rate_hz = {}", cfg.mag_rate_hz),
        format!("alignment_s = {}", cfg.alignment_s),
        format!("gravity = {}", n.gravity),
        format!("accel_gate = {}", cfg.fast_euler.accel_gate),
        format!(
            "q_diag_deg2 = {}",
            join(n.q.diagonal().iter().map(|v| to_deg2(*v)))
        ),
        format!("p0_diag = {}", join(n.p0.diagonal().iter().copied())),
        format!(
            "ra_deg2 = {}",
            join(n.ra_nominal.diagonal().iter().map(|v| to_deg2(*v)))
        ),
        format!("rm_deg2 = {}", to_deg2(n.rm)),
        format!("tau_g = {}", n.tau_g),
        format!("lambda_a = {}", n.lambda_a),
        format!("gamma2_max = {}", n.gamma2_max),
        format!("cf_kp = {}", cfg.cf_kp),
        format!("cf_ki = {}", cfg.cf_ki),
    ]
    .join("\n")
        + "\n"
}

/// Stable 64-bit FNV-1a digest of the canonical config text.
pub fn config_hash(cfg: &PipelineConfig) -> u64 {
    format_config(cfg)
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
            (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
        })
}

pub fn read_config_file(path: &Path) -> Result<PipelineConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| parse_err(&path.display().to_string(), e.to_string()))?;
    parse_config(&text).map_err(|e| parse_err(&path.display().to_string(), e.to_string()))
}

// ---------------------------------------------------------------------------
// Scenario file (TOML)
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    rate_hz: f64,
    #[serde(default)]
    seed: u64,
    /// `"benchmark"` uses the built-in flight instead of `segment` entries.
    preset: Option<String>,
    #[serde(default)]
    initial_deg: [f64; 3],
    #[serde(default)]
    segment: Vec<SegmentFile>,
    #[serde(default)]
    gyro: GyroFile,
    #[serde(default)]
    accel: AccelFile,
    #[serde(default)]
    mag: MagFile,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentFile {
    duration: f64,
    #[serde(default)]
    rate_dps: [f64; 3],
    #[serde(default)]
    accel: [f64; 3],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct GyroFile {
    constant_bias: [f64; 3],
    tau_g: f64,
    markov_sigma: f64,
    white_density: f64,
}

impl Default for GyroFile {
    fn default() -> Self {
        let g = GyroModel::default();
        Self {
            constant_bias: g.constant_bias.into(),
            tau_g: g.tau_g,
            markov_sigma: g.markov_sigma,
            white_density: g.white_density,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct AccelFile {
    white_density: f64,
    gravity: f64,
}

impl Default for AccelFile {
    fn default() -> Self {
        let a = AccelModel::default();
        Self {
            white_density: a.white_density,
            gravity: a.gravity,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct MagFile {
    field: [f64; 3],
    white_density: f64,
    rate_hz: Option<f64>,
}

impl Default for MagFile {
    fn default() -> Self {
        let m = MagModel::default();
        Self {
            field: m.field.into(),
            white_density: m.white_density,
            rate_hz: m.rate_hz,
        }
    }
}

/// Everything `simulate` needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub trajectory: TrajectorySpec,
    pub gyro: GyroModel,
    pub accel: AccelModel,
    pub mag: MagModel,
    pub rate_hz: f64,
    pub seed: u64,
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let file: ScenarioFile =
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
    let trajectory = match file.preset.as_deref() {
        Some("benchmark") => {
            if !file.segment.is_empty() {
                return Err(Error::Config(
                    "preset and segment are mutually exclusive".into(),
                ));
            }
            TrajectorySpec::benchmark()
        }
        Some(other) => return Err(Error::Config(format!("unknown preset {other:?}"))),
        None => TrajectorySpec {
            initial: EulerAngles::from_degrees(
                file.initial_deg[0],
                file.initial_deg[1],
                file.initial_deg[2],
            ),
            segments: file
                .segment
                .iter()
                .map(|s| Segment {
                    duration: s.duration,
                    rate: Vector3::from(s.rate_dps).map(f64::to_radians),
                    lin_accel: Vector3::from(s.accel),
                })
                .collect(),
        },
    };
    Ok(Scenario {
        trajectory,
        gyro: GyroModel {
            constant_bias: Vector3::from(file.gyro.constant_bias),
            tau_g: file.gyro.tau_g,
            markov_sigma: file.gyro.markov_sigma,
            white_density: file.gyro.white_density,
        },
        accel: AccelModel {
            white_density: file.accel.white_density,
            gravity: file.accel.gravity,
        },
        mag: MagModel {
            field: Vector3::from(file.mag.field),
            white_density: file.mag.white_density,
            rate_hz: file.mag.rate_hz,
        },
        rate_hz: file.rate_hz,
        seed: file.seed,
    })
}

pub fn read_scenario_file(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| parse_err(&path.display().to_string(), e.to_string()))?;
    parse_scenario(&text).map_err(|e| parse_err(&path.display().to_string(), e.to_string()))
}
