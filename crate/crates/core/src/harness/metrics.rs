//! Trial metrics: disturbance rejection ratio and success rate.

use super::trial::{TraceRow, TrialResult};
use crate::error::{Error, Result};

/// Travel covered by each rejection window either side of a step, m.
pub const WINDOW_LENGTH: f64 = 0.010;

fn window_mean(samples: &[(f64, f64)], w: (f64, f64)) -> Result<f64> {
    let (sum, n) = samples
        .iter()
        .filter(|(k, _)| *k >= w.0 && *k < w.1)
        .fold((0.0, 0usize), |(s, n), (_, v)| (s + v, n + 1));
    if n == 0 {
        return Err(Error::Metric(format!("window [{}, {}) holds no samples", w.0, w.1)));
    }
    Ok(sum / n as f64)
}

/// `(mean over dist - mean over pre) / magnitude` for `(key, value)`
/// samples; windows are half-open `[start, end)` in the key.
pub fn disturbance_rejection(samples: &[(f64, f64)], pre: (f64, f64), dist: (f64, f64), magnitude: f64) -> Result<f64> {
    if !(magnitude > 0.0) {
        return Err(Error::Metric(format!("disturbance magnitude {magnitude}")));
    }
    if !(pre.0 < pre.1 && dist.0 < dist.1) {
        return Err(Error::Metric("empty window".into()));
    }
    let overlap = pre.0 < dist.1 && dist.0 < pre.1;
    if overlap {
        return Err(Error::Metric("windows overlap".into()));
    }
    Ok((window_mean(samples, dist)? - window_mean(samples, pre)?) / magnitude)
}

/// Mean rejection ratio over every step of a trial, using windows of
/// [`WINDOW_LENGTH`] of travel before and after each step start. `None` for
/// flat phantoms or when no step was reached.
pub fn trial_rejection(r: &TrialResult, metric: impl Fn(&TraceRow) -> f64) -> Option<f64> {
    if r.step_height <= 0.0 {
        return None;
    }
    let samples: Vec<(f64, f64)> = r.traces.iter().map(|row| (row.position, metric(row))).collect();
    let ratios: Vec<f64> = r
        .step_starts
        .iter()
        .filter_map(|&s| {
            disturbance_rejection(&samples, (s - WINDOW_LENGTH, s), (s, s + WINDOW_LENGTH), r.step_height).ok()
        })
        .collect();
    if ratios.is_empty() {
        None
    } else {
        Some(ratios.iter().sum::<f64>() / ratios.len() as f64)
    }
}

pub fn success_rate(results: &[TrialResult]) -> Result<f64> {
    if results.is_empty() {
        return Err(Error::Metric("no trials".into()));
    }
    Ok(results.iter().filter(|r| r.success).count() as f64 / results.len() as f64)
}
