//! Deflection-filter benchmark with no model mismatch: the simulated tool
//! and the filter share every parameter, the carriage speed sweeps
//! sinusoidally, and the filter sees direct noisy tip and neutral readings
//! at the control rate.

use super::config::Calibration;
use crate::error::{Error, Result};
use crate::estimators::{DeflectionFilter, ToolMeasurement};
use crate::tool_dynamics::{self, ToolState};
use nalgebra::Vector2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::PI;

/// Carriage speed sweep: mean, amplitude (m/s) and period (s).
pub const SWEEP: (f64, f64, f64) = (0.007, 0.004, 8.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkResult {
    pub rmse: f64,
    pub peak_deflection: f64,
    pub ticks: usize,
}

pub fn deflection_benchmark(cal: &Calibration, seed: u64, duration: f64) -> Result<BenchmarkResult> {
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::Config(format!("benchmark duration {duration}")));
    }
    let tool = cal.tool()?;
    let cfg = cal.deflection_filter()?;
    let dt = 1.0 / cal.control.frame_rate;
    let n_sub = (dt / cal.trial.substep).round().max(1.0) as usize;
    let h = dt / n_sub as f64;
    let (mean, amp, period) = SWEEP;
    let speed = |t: f64| mean + amp * (2.0 * PI * t / period).sin();

    let x_n = Vector2::zeros();
    let mut truth = ToolState::equilibrium(x_n, speed(0.0), &tool)?;
    let mut filter = DeflectionFilter::new(cfg.clone(), &truth)?;
    let tip_noise = Normal::new(0.0, cfg.meas_noise[(0, 0)].sqrt()).map_err(|e| Error::Config(e.to_string()))?;
    let neutral_noise = Normal::new(0.0, cfg.meas_noise[(2, 2)].sqrt()).map_err(|e| Error::Config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let ticks = (duration / dt).ceil() as usize;
    let (mut sq, mut peak) = (0.0, 0.0_f64);
    for k in 0..ticks {
        // Command held over the control period, as in a trial.
        let u = speed(k as f64 * dt);
        for _ in 0..n_sub {
            truth = tool_dynamics::step(&truth, u, h, &tool)?;
        }
        let mut noise = |d: &Normal<f64>| Vector2::new(d.sample(&mut rng), d.sample(&mut rng));
        let z = ToolMeasurement {
            tip: truth.x_t + noise(&tip_noise),
            neutral: truth.x_n + noise(&neutral_noise),
        };
        let (_, est) = filter.step(u, Some(&z), dt)?;
        let real = tool_dynamics::deflection(&truth);
        sq += (est - real).powi(2);
        peak = peak.max(real);
    }
    Ok(BenchmarkResult {
        rmse: (sq / ticks as f64).sqrt(),
        peak_deflection: peak,
        ticks,
    })
}
