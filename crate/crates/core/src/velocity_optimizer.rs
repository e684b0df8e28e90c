//! One-step velocity selection: minimise
//!
//! ```text
//! J(v) = a F(v)^2 + b w(v)^2 + c (v - v_prev)^2 + r s(v)
//! ```
//!
//! over `[v_min, v_max]`, where `s` penalises going slower than `v_bar`.
//! Velocities are passed in m/s, but the cost is evaluated with force in N,
//! width in mm and velocity in mm/s so that unit weights balance newtons of
//! force against millimetres of thermal spread.

use crate::error::{Error, Result};

/// Form of the time-wasting term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SlackPenalty {
    /// `min(v - v_bar, 0)^2`.
    #[default]
    Squared,
    /// `min(v - v_bar, 0)`, which rewards slowness; kept for comparison.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostWeights {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub r: f64,
    /// Reference velocity, m/s.
    pub v_bar: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub slack: SlackPenalty,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            a: 1.0,
            b: 1.0,
            c: 0.001,
            r: 0.001,
            v_bar: 0.007,
            v_min: 0.0005,
            v_max: 0.015,
            slack: SlackPenalty::Squared,
        }
    }
}

impl CostWeights {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::Config(format!("cost weights: {what}")));
        for (name, v) in [("a", self.a), ("b", self.b), ("c", self.c), ("r", self.r)] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} = {v}"));
            }
        }
        if !(self.v_min > 0.0 && self.v_min < self.v_max && self.v_max.is_finite()) {
            return bad(format!("velocity bounds [{}, {}]", self.v_min, self.v_max));
        }
        if !(self.v_bar >= self.v_min && self.v_bar <= self.v_max) {
            return bad(format!("v_bar = {} outside bounds", self.v_bar));
        }
        Ok(())
    }

    pub fn span(&self) -> f64 {
        self.v_max - self.v_min
    }
}

const TO_MM: f64 = 1e3;

fn model_err(v: f64, e: Error) -> Error {
    Error::Model {
        velocity: v,
        source: Box::new(e),
    }
}

/// Cost of commanding `v` (m/s) after `v_prev`. `force_model` returns the
/// cutting force in N (either sign), `width_model` the isotherm width in m.
pub fn cost<F, W>(v: f64, v_prev: f64, w: &CostWeights, force_model: F, width_model: W) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
    W: Fn(f64) -> Result<f64>,
{
    let force = force_model(v).map_err(|e| model_err(v, e))?;
    let width = width_model(v).map_err(|e| model_err(v, e))? * TO_MM;
    let dv = (v - v_prev) * TO_MM;
    let slack = ((v - w.v_bar) * TO_MM).min(0.0);
    let slack_term = match w.slack {
        SlackPenalty::Squared => slack * slack,
        SlackPenalty::Linear => slack,
    };
    let j = w.a * force * force + w.b * width * width + w.c * dv * dv + w.r * slack_term;
    if j.is_finite() {
        Ok(j)
    } else {
        Err(model_err(v, Error::Optimization(format!("non-finite cost {j}"))))
    }
}

const SCAN_POINTS: usize = 256;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Argmin of [`cost`] over `[v_min, v_max]`.
///
/// A uniform scan brackets the best basin, golden-section search narrows it
/// and a finite-difference Newton step on the derivative polishes the
/// result; every candidate is kept only if it lowers the cost. Points where
/// the models fail are treated as infinitely expensive.
pub fn optimize_velocity<F, W>(v_prev: f64, w: &CostWeights, force_model: F, width_model: W) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
    W: Fn(f64) -> Result<f64>,
{
    w.validate()?;
    let j = |v: f64| cost(v, v_prev, w, &force_model, &width_model).unwrap_or(f64::INFINITY);
    let (lo, hi) = (w.v_min, w.v_max);
    let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let at = |i: usize| if i == SCAN_POINTS - 1 { hi } else { lo + step * i as f64 };
    let mut best_i = 0;
    let mut best_j = f64::INFINITY;
    for i in 0..SCAN_POINTS {
        let ji = j(at(i));
        if ji < best_j {
            best_j = ji;
            best_i = i;
        }
    }
    if !best_j.is_finite() {
        return Err(Error::Optimization("cost is non-finite on the whole interval".into()));
    }
    let mut best_v = at(best_i);

    let (mut a, mut b) = (at(best_i.saturating_sub(1)), at((best_i + 1).min(SCAN_POINTS - 1)));
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let (mut f1, mut f2) = (j(x1), j(x2));
    let tol = 1e-9 * (hi - lo);
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = j(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = j(x2);
        }
    }
    for (v, jv) in [(x1, f1), (x2, f2)] {
        if jv < best_j {
            best_j = jv;
            best_v = v;
        }
    }

    // Newton on J' with central differences.
    let h = 1e-6 * (hi - lo);
    for _ in 0..3 {
        let (jm, j0, jp) = (j(best_v - h), best_j, j(best_v + h));
        let d1 = (jp - jm) / (2.0 * h);
        let d2 = (jp - 2.0 * j0 + jm) / (h * h);
        if !(d2 > 0.0 && d1.is_finite()) {
            break;
        }
        let cand = (best_v - d1 / d2).clamp(lo, hi);
        let jc = j(cand);
        if jc < best_j {
            best_v = cand;
            best_j = jc;
        } else {
            break;
        }
    }
    Ok(best_v)
}
