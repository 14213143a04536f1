//! RMSE metrics, run comparison and improvement percentages.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::math::EulerAngles;

/// Per-angle RMSE in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Rmse {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl Rmse {
    pub fn as_array(&self) -> [f64; 3] {
        [self.roll, self.pitch, self.yaw]
    }
}

/// Residual in degrees wrapped to `(−180, 180]`.
fn wrapped_residual_deg(est: f64, truth: f64) -> f64 {
    crate::math::wrap_pi(est - truth).to_degrees()
}

/// Root-mean-square of wrapped residuals per angle, in degrees.
pub fn rmse(est: &[EulerAngles], truth: &[EulerAngles]) -> Result<Rmse> {
    if est.is_empty() || est.len() != truth.len() {
        return Err(Error::LengthMismatch(est.len(), truth.len()));
    }
    let mut sums = [0.0f64; 3];
    for (e, t) in est.iter().zip(truth) {
        let r = [
            wrapped_residual_deg(e.roll, t.roll),
            wrapped_residual_deg(e.pitch, t.pitch),
            wrapped_residual_deg(e.yaw, t.yaw),
        ];
        for (s, v) in sums.iter_mut().zip(r) {
            *s += v * v;
        }
    }
    let n = est.len() as f64;
    Ok(Rmse {
        roll: (sums[0] / n).sqrt(),
        pitch: (sums[1] / n).sqrt(),
        yaw: (sums[2] / n).sqrt(),
    })
}

/// Percentage by which `candidate` improves on `baseline`, relative to the
/// candidate: `100·(baseline − candidate)/candidate`.
pub fn improvement(baseline_rmse: f64, candidate_rmse: f64) -> Result<f64> {
    if !(candidate_rmse > 0.0 && candidate_rmse.is_finite()) || !baseline_rmse.is_finite() {
        return Err(Error::Domain(format!(
            "candidate RMSE must be positive, got {candidate_rmse}"
        )));
    }
    Ok(100.0 * (baseline_rmse - candidate_rmse) / candidate_rmse)
}

/// A timestamped angle sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stamped {
    pub t: f64,
    pub angles: EulerAngles,
}

/// Pairs each truth sample with the nearest estimate no further than half the
/// median truth period away. Unmatched truth samples are dropped.
pub fn align(est: &[Stamped], truth: &[Stamped]) -> (Vec<EulerAngles>, Vec<EulerAngles>) {
    let mut periods: Vec<f64> = truth.windows(2).map(|w| w[1].t - w[0].t).collect();
    periods.sort_by(f64::total_cmp);
    let tolerance = periods
        .get(periods.len() / 2)
        .map(|p| 0.5 * p)
        .unwrap_or(f64::INFINITY);

    let mut out_est = Vec::with_capacity(truth.len());
    let mut out_truth = Vec::with_capacity(truth.len());
    for s in truth {
        let i = est.partition_point(|e| e.t < s.t);
        let nearest = [i.checked_sub(1), (i < est.len()).then_some(i)]
            .into_iter()
            .flatten()
            .min_by(|&a, &b| (est[a].t - s.t).abs().total_cmp(&(est[b].t - s.t).abs()));
        if let Some(j) = nearest {
            if (est[j].t - s.t).abs() <= tolerance {
                out_est.push(est[j].angles);
                out_truth.push(s.angles);
            }
        }
    }
    (out_est, out_truth)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub algorithm: String,
    pub config_hash: u64,
    pub estimates: Vec<EulerAngles>,
    pub truth: Vec<EulerAngles>,
    pub rmse: Rmse,
}

impl RunResult {
    pub fn new(
        algorithm: impl Into<String>,
        config_hash: u64,
        estimates: Vec<EulerAngles>,
        truth: Vec<EulerAngles>,
    ) -> Result<Self> {
        let rmse = rmse(&estimates, &truth)?;
        Ok(Self {
            algorithm: algorithm.into(),
            config_hash,
            estimates,
            truth,
            rmse,
        })
    }

    /// Aligns timestamped estimates against truth, then scores them.
    pub fn from_stamped(
        algorithm: impl Into<String>,
        config_hash: u64,
        est: &[Stamped],
        truth: &[Stamped],
    ) -> Result<Self> {
        let (e, t) = align(est, truth);
        if e.is_empty() {
            return Err(Error::Domain(
                "no estimate lies within half a sample period of any truth sample".into(),
            ));
        }
        Self::new(algorithm, config_hash, e, t)
    }
}

const ANGLE_NAMES: [&str; 3] = ["roll", "pitch", "yaw"];

/// Plain-text table followed by a `key=value` block.
pub fn format_report(run: &RunResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "algorithm: {}", run.algorithm);
    let _ = writeln!(out, "samples:   {}", run.estimates.len());
    let _ = writeln!(out, "{:<10}{:>12}", "angle", "RMSE/deg");
    for (name, v) in ANGLE_NAMES.iter().zip(run.rmse.as_array()) {
        let _ = writeln!(out, "{:<10}{:>12.4}", name, v);
    }
    out.push('\n');
    let _ = writeln!(out, "algorithm={}", run.algorithm);
    let _ = writeln!(out, "config_hash={:016x}", run.config_hash);
    let _ = writeln!(out, "samples={}", run.estimates.len());
    for (name, v) in ANGLE_NAMES.iter().zip(run.rmse.as_array()) {
        let _ = writeln!(out, "rmse_{name}_deg={v}");
    }
    out
}

/// Side-by-side comparison: one row per angle, baseline and candidate RMSE, improvement.
pub fn format_comparison(baseline: &RunResult, candidate: &RunResult) -> Result<String> {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12}{:>14}{:>14}{:>16}",
        "filter", baseline.algorithm, candidate.algorithm, "improvement/%"
    );
    let mut improvements = [0.0; 3];
    for (i, name) in ANGLE_NAMES.iter().enumerate() {
        let b = baseline.rmse.as_array()[i];
        let c = candidate.rmse.as_array()[i];
        improvements[i] = improvement(b, c)?;
        let label = format!("{}{}/deg", name[..1].to_uppercase(), &name[1..]);
        let _ = writeln!(
            out,
            "{:<12}{:>14.4}{:>14.4}{:>16.1}",
            label, b, c, improvements[i]
        );
    }
    out.push('\n');
    let _ = writeln!(out, "baseline={}", baseline.algorithm);
    let _ = writeln!(out, "candidate={}", candidate.algorithm);
    for (i, name) in ANGLE_NAMES.iter().enumerate() {
        let _ = writeln!(
            out,
            "rmse_{name}_deg_baseline={}",
            baseline.rmse.as_array()[i]
        );
        let _ = writeln!(
            out,
            "rmse_{name}_deg_candidate={}",
            candidate.rmse.as_array()[i]
        );
        let _ = writeln!(out, "improvement_{name}_pct={}", improvements[i]);
    }
    Ok(out)
}
