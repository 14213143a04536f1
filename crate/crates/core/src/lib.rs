//! FastEuler double-layer Kalman filter attitude and heading reference system.
//!
//! The filter estimates roll, pitch, yaw and gyro bias from a MEMS gyro,
//! accelerometer and magnetometer:
//!
//! - [`propagator`] integrates bias-compensated gyro rates into a quaternion.
//! - [`fasteuler`] turns raw accel/mag vectors into measured angles, rejecting
//!   accelerometer samples whose norm is far from gravity.
//! - [`dlkf`] is the six-state error-state Kalman filter whose accelerometer
//!   and magnetometer corrections run as two sequential layers.
//! - [`pipeline`] wires them together per IMU epoch.
//!
//! Around the filter sit a complementary-filter baseline ([`cf`]), a
//! synthetic data generator ([`sim`]), RMSE scoring ([`eval`]) and the file
//! formats ([`io`]).

pub mod cf;
pub mod dlkf;
pub mod error;
pub mod eval;
pub mod fasteuler;
pub mod io;
pub mod math;
pub mod pipeline;
pub mod propagator;
pub mod sim;

pub use error::{Error, Result};
pub use math::{Dcm, EulerAngles, Quaternion, Vector3};
pub use pipeline::{run_pipeline, Algorithm, AttitudeEstimate, PipelineConfig};
pub use sim::SensorRecord;
