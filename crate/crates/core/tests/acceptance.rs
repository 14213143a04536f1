//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::time::{Duration, Instant};

use ahrs_core::dlkf::{self, FilterState, Matrix6, NoiseConfig, Vector6};
use ahrs_core::eval::{improvement, rmse};
use ahrs_core::fasteuler::{accel_roll_pitch, mag_yaw, FastEulerConfig};
use ahrs_core::math::wrap_pi;
use ahrs_core::pipeline::{prepare, Algorithm, PipelineConfig};
use ahrs_core::sim::{
    simulate, simulate_detailed, AccelModel, GyroModel, MagModel, TrajectorySpec,
    BENCHMARK_ACCEL_DURATION, BENCHMARK_ACCEL_START,
};
use ahrs_core::{run_pipeline, AttitudeEstimate, EulerAngles, Quaternion, SensorRecord, Vector3};
use nalgebra::{Matrix2, SMatrix, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const IMU_HZ: f64 = 250.0;
const SEED: u64 = 1;

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: u32, name: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let in_time = elapsed <= limit;
    let pass = out.pass && in_time;
    println!(
        "[{}] criterion {id} {name}: {} (runtime {:.3?}{})",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed,
        if in_time {
            String::new()
        } else {
            format!(", over {limit:?} limit")
        },
    );
    pass
}

fn mag_10hz() -> MagModel {
    MagModel {
        rate_hz: Some(10.0),
        ..MagModel::default()
    }
}

fn window_rmse(
    records: &[SensorRecord],
    est: &[AttitudeEstimate],
    from: f64,
    to: f64,
) -> ahrs_core::eval::Rmse {
    let (e, t): (Vec<_>, Vec<_>) = records
        .iter()
        .zip(est)
        .filter(|(r, _)| r.t >= from && r.t < to)
        .map(|(r, e)| (e.euler, r.truth.expect("synthetic truth")))
        .unzip();
    rmse(&e, &t).expect("non-empty window")
}

// 1 ------------------------------------------------------------------------

fn improvement_arithmetic() -> Outcome {
    let cases = [
        (1.7967, 1.3156, 36.6),
        (1.4317, 1.0091, 41.9),
        (4.0636, 2.850, 42.6),
    ];
    let mut pass = true;
    let mut got = Vec::new();
    for (base, cand, expected) in cases {
        let v = improvement(base, cand).expect("positive candidate");
        pass &= (v - expected).abs() <= 0.1;
        got.push(format!("{v:.2}% (expected {expected}%)"));
    }
    Outcome {
        pass,
        detail: got.join(", "),
    }
}

// 2 ------------------------------------------------------------------------

fn random_pd<const N: usize>(rng: &mut ChaCha8Rng, scale: f64) -> SMatrix<f64, N, N> {
    let a = SMatrix::<f64, N, N>::from_fn(|_, _| rng.random_range(-1.0..1.0));
    (a * a.transpose() + SMatrix::<f64, N, N>::identity() * 0.05) * scale
}

/// Joint 3-row update written out with an explicit inverse.
fn joint_update(
    x: &Vector6,
    p: &Matrix6,
    z: &nalgebra::Vector3<f64>,
    ra: &Matrix2<f64>,
    rm: f64,
) -> (Vector6, Matrix6) {
    let mut h = SMatrix::<f64, 3, 6>::zeros();
    h[(0, 0)] = 1.0;
    h[(1, 1)] = 1.0;
    h[(2, 2)] = 1.0;
    let mut r = nalgebra::Matrix3::<f64>::zeros();
    r.fixed_view_mut::<2, 2>(0, 0).copy_from(ra);
    r[(2, 2)] = rm;
    let s = h * p * h.transpose() + r;
    let k = p * h.transpose() * s.try_inverse().expect("PD innovation");
    let x_new = x + k * (z - h * x);
    let ikh = Matrix6::identity() - k * h;
    let p_new = ikh * p * ikh.transpose() + k * r * k.transpose();
    (x_new, p_new)
}

fn sequential_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    let n = 1000;
    for _ in 0..n {
        let scale = rng.random_range(1e-4..2.0);
        let p = random_pd::<6>(&mut rng, scale);
        let scale = rng.random_range(1e-4..1.0);
        let ra = random_pd::<2>(&mut rng, scale);
        let rm = rng.random_range(1e-4..1.0);
        let x = Vector6::from_fn(|_, _| rng.random_range(-0.2..0.2));
        let z = nalgebra::Vector3::from_fn(|_, _| rng.random_range(-0.5..0.5));

        let fs = FilterState { x, p };
        let layer1 = dlkf::accel_update(&fs, &Vector2::new(z[0], z[1]), &ra).expect("layer 1");
        let layer2 = dlkf::mag_update(&layer1, z[2], rm).expect("layer 2");
        let (xj, pj) = joint_update(&x, &p, &z, &ra, rm);
        worst = worst
            .max((layer2.x - xj).abs().max())
            .max((layer2.p - pj).abs().max());
    }
    Outcome {
        pass: worst <= 1e-9,
        detail: format!("max |sequential − joint| = {worst:.2e} over {n} instances (limit 1e-9)"),
    }
}

// 3 ------------------------------------------------------------------------

fn bias_convergence() -> Outcome {
    let bias = Vector3::new(0.02, -0.01, 0.015);
    let records = simulate(
        &TrajectorySpec::stationary(EulerAngles::default(), 60.0),
        &GyroModel {
            constant_bias: bias,
            ..GyroModel::default()
        },
        &AccelModel::default(),
        &mag_10hz(),
        IMU_HZ,
        SEED,
    )
    .expect("simulate");
    // No alignment window: the bias has to be found by the filter itself.
    let cfg = PipelineConfig {
        alignment_s: 0.0,
        ..PipelineConfig::default()
    };
    let est = run_pipeline(&records, &cfg).expect("pipeline");
    let rel = |e: &AttitudeEstimate| {
        (0..3)
            .map(|i| ((e.bias[i] - bias[i]) / bias[i]).abs())
            .fold(0.0, f64::max)
    };
    let k30 = records
        .iter()
        .position(|r| r.t >= 30.0)
        .expect("30 s sample");
    let at30 = rel(&est[k30]);
    let at_end = rel(est.last().expect("estimates"));
    let after = window_rmse(&records, &est, 30.0, f64::INFINITY);
    Outcome {
        pass: at30 <= 0.10 && at_end <= 0.10 && after.roll < 0.5 && after.pitch < 0.5,
        detail: format!(
            "bias error {:.1}% at 30 s, {:.1}% at 60 s (limit 10%); roll/pitch RMS after 30 s {:.3}°/{:.3}° (limit 0.5°)",
            at30 * 100.0,
            at_end * 100.0,
            after.roll,
            after.pitch
        ),
    }
}

// 4 ------------------------------------------------------------------------

struct Benchmark {
    records: Vec<SensorRecord>,
}

impl Benchmark {
    fn new() -> Self {
        let records = simulate(
            &TrajectorySpec::benchmark(),
            &GyroModel::default(),
            &AccelModel::default(),
            &mag_10hz(),
            IMU_HZ,
            SEED,
        )
        .expect("simulate");
        Self { records }
    }
}

fn dynamic_comparison(bench: &Benchmark) -> Outcome {
    let recs = &bench.records;
    let dlkf_cfg = PipelineConfig::default();
    let fixed_cfg = PipelineConfig {
        noise: NoiseConfig {
            lambda_a: 0.0,
            ..NoiseConfig::default()
        },
        ..PipelineConfig::default()
    };
    let cf_cfg = PipelineConfig {
        algorithm: Algorithm::Cf,
        ..PipelineConfig::default()
    };
    let dlkf = run_pipeline(recs, &dlkf_cfg).expect("dlkf");
    let fixed = run_pipeline(recs, &fixed_cfg).expect("dlkf, γ² ≡ 1");
    let cf = run_pipeline(recs, &cf_cfg).expect("cf");

    let d = window_rmse(recs, &dlkf, f64::NEG_INFINITY, f64::INFINITY);
    let c = window_rmse(recs, &cf, f64::NEG_INFINITY, f64::INFINITY);
    let (a0, a1) = (
        BENCHMARK_ACCEL_START,
        BENCHMARK_ACCEL_START + BENCHMARK_ACCEL_DURATION,
    );
    let adaptive = window_rmse(recs, &dlkf, a0, a1);
    let nominal = window_rmse(recs, &fixed, a0, a1);

    let beats = [d.roll < c.roll, d.pitch < c.pitch, d.yaw < c.yaw];
    let adapt = [adaptive.roll < nominal.roll, adaptive.pitch < nominal.pitch];
    let mark = |b: bool| if b { "ok" } else { "NOT" };
    Outcome {
        pass: beats.iter().chain(&adapt).all(|&b| b),
        detail: format!(
            "DLKF vs CF RMSE roll {:.3}/{:.3}° [{}], pitch {:.3}/{:.3}° [{}], yaw {:.3}/{:.3}° [{}]; \
             accel segment adaptive vs γ²≡1 roll {:.3}/{:.3}° [{}], pitch {:.3}/{:.3}° [{}]",
            d.roll, c.roll, mark(beats[0]),
            d.pitch, c.pitch, mark(beats[1]),
            d.yaw, c.yaw, mark(beats[2]),
            adaptive.roll, nominal.roll, mark(adapt[0]),
            adaptive.pitch, nominal.pitch, mark(adapt[1]),
        ),
    }
}

// 5 ------------------------------------------------------------------------

fn end_to_end_identity() -> Outcome {
    // The accelerometer pitch formula is exact when roll or pitch is zero.
    let attitudes = [
        EulerAngles::from_degrees(0.0, 0.0, 0.0),
        EulerAngles::from_degrees(0.0, 0.0, 137.0),
        EulerAngles::from_degrees(25.0, 0.0, 200.0),
        EulerAngles::from_degrees(0.0, -15.0, 300.0),
    ];
    let mut worst = 0.0f64;
    for att in attitudes {
        let records = simulate(
            &TrajectorySpec::stationary(att, 20.0),
            &GyroModel::noiseless(),
            &AccelModel::noiseless(),
            &MagModel {
                rate_hz: Some(10.0),
                ..MagModel::noiseless()
            },
            IMU_HZ,
            SEED,
        )
        .expect("simulate");
        let est = run_pipeline(&records, &PipelineConfig::default()).expect("pipeline");
        let truth = att.to_quaternion();
        for e in &est {
            worst = worst.max(e.q.angle_to(&truth));
        }
    }
    Outcome {
        pass: worst < 1e-6,
        detail: format!("max attitude error {worst:.2e} rad over 4 static attitudes (limit 1e-6)"),
    }
}

// 6 ------------------------------------------------------------------------

fn quaternion_norm_drift() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut q = Quaternion::identity();
    let mut worst = 0.0f64;
    for _ in 0..1_000_000 {
        let v = Vector3::from_fn(|_, _| rng.random_range(-0.05..0.05));
        q = q * Quaternion::from_rotation_vector(&v);
        worst = worst.max((q.norm() - 1.0).abs());
    }
    (
        worst <= 1e-9,
        format!("quaternion |‖q‖−1| {worst:.1e} over 1e6 products"),
    )
}

fn covariance_health(bench: &Benchmark) -> (bool, String) {
    let cfg = PipelineConfig::default();
    let mut pipe = prepare(&bench.records, &cfg).expect("prepare");
    let mut worst_asym = 0.0f64;
    let mut worst_eig = f64::INFINITY;
    for r in &bench.records {
        pipe.step(r).expect("step");
        let fs = pipe.filter_state().expect("dlkf state");
        worst_asym = worst_asym.max(fs.asymmetry());
        worst_eig = worst_eig.min(fs.min_eigenvalue());
    }
    (
        worst_asym <= 1e-10 && worst_eig >= -1e-10,
        format!("P asymmetry {worst_asym:.1e}, min eigenvalue {worst_eig:.1e} over benchmark"),
    )
}

fn fasteuler_round_trips() -> (bool, String) {
    let cfg = FastEulerConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut roll_err = 0.0f64;
    for _ in 0..1000 {
        let roll = rng.random_range(-80f64..80.0).to_radians();
        let yaw = rng.random_range(0f64..360.0).to_radians();
        let att = EulerAngles::new(roll, 0.0, yaw);
        let f = att
            .to_quaternion()
            .to_dcm()
            .nav_to_body(&Vector3::new(0.0, 0.0, -cfg.gravity));
        let (r, _) = accel_roll_pitch(&f, &cfg).expect("static accel passes the gate");
        roll_err = roll_err.max((r - roll).abs());
    }

    let mut yaw_err = 0.0f64;
    for _ in 0..200 {
        let att = EulerAngles::new(
            rng.random_range(-60f64..60.0).to_radians(),
            rng.random_range(-60f64..60.0).to_radians(),
            rng.random_range(0f64..360.0).to_radians(),
        );
        let dip = rng.random_range(-75f64..75.0).to_radians();
        let decl = rng.random_range(-0.3..0.3);
        let field = Vector3::new(
            dip.cos() * f64::cos(decl),
            dip.cos() * f64::sin(decl),
            dip.sin(),
        );
        let m = att.to_quaternion().to_dcm().nav_to_body(&field);
        let yaw = mag_yaw(&m, att.roll, att.pitch).expect("horizontal field");
        let oracle = brute_force_yaw(&m, att.roll, att.pitch);
        yaw_err = yaw_err.max(wrap_pi(yaw - oracle).abs());
    }
    (
        roll_err <= 1e-9 && yaw_err <= 1e-6,
        format!("FastEuler roll {roll_err:.1e} rad, yaw {yaw_err:.1e} rad vs brute force"),
    )
}

/// Heading that makes the de-rotated field point north with no east part,
/// found by exhaustive search plus golden-section refinement.
fn brute_force_yaw(m: &Vector3, roll: f64, pitch: f64) -> f64 {
    let north = |yaw: f64| {
        let c = EulerAngles::new(roll, pitch, yaw).to_quaternion().to_dcm();
        let h = c.body_to_nav(m);
        h.x / h.x.hypot(h.y)
    };
    let n = 7200;
    let step = std::f64::consts::TAU / n as f64;
    let best = (0..n)
        .map(|i| i as f64 * step)
        .max_by(|a, b| north(*a).total_cmp(&north(*b)))
        .expect("grid");
    let (mut lo, mut hi) = (best - step, best + step);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    while hi - lo > 1e-12 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if north(a) < north(b) {
            lo = a;
        } else {
            hi = b;
        }
    }
    0.5 * (lo + hi)
}

fn rmse_oracle() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(1..300);
        let mut est = Vec::with_capacity(n);
        let mut truth = Vec::with_capacity(n);
        for _ in 0..n {
            let mut a = || rng.random_range(-7.0..7.0);
            est.push(EulerAngles::new(a(), a(), a()));
            truth.push(EulerAngles::new(a(), a(), a()));
        }
        let got = rmse(&est, &truth).expect("rmse");
        let oracle = |pick: fn(&EulerAngles) -> f64| {
            let mut sum = 0.0;
            for (e, t) in est.iter().zip(&truth) {
                let mut d = (pick(e) - pick(t)).to_degrees();
                while d > 180.0 {
                    d -= 360.0;
                }
                while d <= -180.0 {
                    d += 360.0;
                }
                sum += d * d;
            }
            (sum / n as f64).sqrt()
        };
        worst = worst
            .max((got.roll - oracle(|a| a.roll)).abs())
            .max((got.pitch - oracle(|a| a.pitch)).abs())
            .max((got.yaw - oracle(|a| a.yaw)).abs());
    }
    (worst <= 1e-12, format!("rmse vs brute force {worst:.1e}°"))
}

fn markov_variance() -> (bool, String) {
    let (sigma, tau, rate, duration) = (0.01, 0.5, 100.0, 3000.0);
    let run = simulate_detailed(
        &TrajectorySpec::stationary(EulerAngles::default(), duration),
        &GyroModel {
            constant_bias: Vector3::zeros(),
            tau_g: tau,
            markov_sigma: sigma,
            white_density: 0.0,
        },
        &AccelModel::noiseless(),
        &MagModel::noiseless(),
        rate,
        SEED,
    )
    .expect("simulate");
    let burn_in = (10.0 * tau * rate) as usize;
    let samples: Vec<f64> = run.gyro_bias[burn_in..]
        .iter()
        .flat_map(|b| b.iter().copied().collect::<Vec<_>>())
        .collect();
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / samples.len() as f64;
    let expected = sigma * sigma * tau / 2.0;
    let rel = (var / expected - 1.0).abs();
    (
        rel <= 0.10,
        format!("Markov variance {:.1}% off σ²τ/2", rel * 100.0),
    )
}

fn determinism(bench: &Benchmark) -> (bool, String) {
    let again = Benchmark::new();
    let same_input = bench.records == again.records;
    let cfg = PipelineConfig::default();
    let a = run_pipeline(&bench.records, &cfg).expect("run a");
    let b = run_pipeline(&again.records, &cfg).expect("run b");
    let mut csv_a = Vec::new();
    let mut csv_b = Vec::new();
    ahrs_core::io::write_estimates(&mut csv_a, &a).expect("write a");
    ahrs_core::io::write_estimates(&mut csv_b, &b).expect("write b");
    let ok = same_input && a == b && csv_a == csv_b;
    (ok, format!("reruns bit-identical: {ok}"))
}

fn property_suites(bench: &Benchmark) -> Outcome {
    let checks = [
        quaternion_norm_drift(),
        covariance_health(bench),
        fasteuler_round_trips(),
        rmse_oracle(),
        markov_variance(),
        determinism(bench),
    ];
    Outcome {
        pass: checks.iter().all(|(ok, _)| *ok),
        detail: checks
            .iter()
            .map(|(ok, d)| format!("{d} [{}]", if *ok { "ok" } else { "NOT" }))
            .collect::<Vec<_>>()
            .join("; "),
    }
}

fn main() {
    let bench = Benchmark::new();
    let results = [
        report(
            1,
            "improvement arithmetic",
            Duration::from_millis(1),
            improvement_arithmetic,
        ),
        report(
            2,
            "sequential-equivalence oracle",
            Duration::from_secs(5),
            sequential_equivalence,
        ),
        report(
            3,
            "bias convergence",
            Duration::from_secs(10),
            bias_convergence,
        ),
        report(4, "dynamic comparison", Duration::from_secs(30), || {
            dynamic_comparison(&bench)
        }),
        report(
            5,
            "end-to-end identity",
            Duration::from_secs(10),
            end_to_end_identity,
        ),
        report(6, "property suites", Duration::from_secs(120), || {
            property_suites(&bench)
        }),
    ];
    let failed = results.iter().filter(|p| !**p).count();
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
