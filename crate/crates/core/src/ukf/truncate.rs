//! Moment-matching projection of a Gaussian onto box constraints.
//!
//! Constraints are applied one component at a time. For component `i` with
//! standard deviation `s` the posterior is decorrelated so that `x_i` is an
//! independent standard normal, the one-dimensional truncated moments
//! `(m, v)` are taken on `[(lo - mu_i)/s, (hi - mu_i)/s]`, and the result is
//! mapped back. Working through the decorrelating transform, only the
//! direction `P e_i` changes, which collapses to
//!
//! ```text
//! mu' = mu + P e_i m / s
//! P'  = P - (1 - v) P e_i e_i^T P / s^2
//! ```
//!
//! Later components see the already-truncated belief.

use super::{Bounds, GaussianBelief};
use crate::error::{domain, Error, Result};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Below this width (in standard deviations) the interval is treated as
/// uniform.
const NARROW: f64 = 1e-5;

fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Upper tail `P(Z > x)`.
fn upper_tail(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Above this lower limit the moments go through the Mills ratio, since
/// `pdf` and the tail mass underflow together.
const FAR_TAIL: f64 = 5.0;

/// Far-tail Mills ratio `M(x) = P(Z > x) / pdf(x)` together with
/// `1 / M(x) - x`, both from the continued fraction
/// `1 / M = x + 1 / (x + 2 / (x + 3 / ...))`.
fn mills_far(x: f64) -> (f64, f64) {
    let mut g = x;
    for k in (2..=100).rev() {
        g = x + k as f64 / g;
    }
    let delta = 1.0 / g;
    (1.0 / (x + delta), delta)
}

/// Mean and variance of a standard normal conditioned on `[a, b]`.
/// `None` when the interval carries no representable probability mass.
pub fn truncated_normal_moments(a: f64, b: f64) -> Option<(f64, f64)> {
    if a.is_nan() || b.is_nan() || a >= b {
        return None;
    }
    if b <= 0.0 || (a < 0.0 && a + b < 0.0 && b.is_finite()) {
        // Reflect so the interval leans right, where the tails are accurate.
        return truncated_normal_moments(-b, -a).map(|(m, v)| (-m, v));
    }
    if b - a < NARROW {
        let mid = 0.5 * (a + b);
        return Some((mid, (b - a) * (b - a) / 12.0));
    }
    if a >= FAR_TAIL {
        // Everything divided by pdf(a), with r = pdf(b) / pdf(a). Written so
        // that the O(a^2) terms cancel analytically:
        //   z        = M(a) - r M(b)
        //   mean - a = (delta_a M(a) - r M(b) (delta_b + b - a)) / z
        //   var      = 1 - mean (mean - a) - (b - a) r / z
        let (ma, da) = mills_far(a);
        let (r, mb, db) = if b.is_finite() {
            let (mb, db) = mills_far(b);
            ((-0.5 * (b - a) * (b + a)).exp(), mb, db)
        } else {
            (0.0, 0.0, 0.0)
        };
        let z = ma - r * mb;
        let gap = if r > 0.0 { b - a } else { 0.0 };
        let excess = (da * ma - r * mb * (db + gap)) / z;
        let mean = a + excess;
        let var = 1.0 - mean * excess - gap * r / z;
        if !(z > 0.0 && mean.is_finite() && var.is_finite()) {
            return None;
        }
        return Some((inside(mean, a, b), var.clamp(f64::MIN_POSITIVE, 1.0)));
    }
    let (pa, pb) = (pdf(a), if b.is_finite() { pdf(b) } else { 0.0 });
    let z = if a >= 0.0 {
        upper_tail(a) - upper_tail(b)
    } else {
        0.5 * (libm::erf(b * FRAC_1_SQRT_2) - libm::erf(a * FRAC_1_SQRT_2))
    };
    if !(z > 0.0) || !z.is_finite() {
        return None;
    }
    let mean = (pa - pb) / z;
    let a_term = if a.is_finite() { a * pa } else { 0.0 };
    let b_term = if b.is_finite() { b * pb } else { 0.0 };
    let var = 1.0 + (a_term - b_term) / z - mean * mean;
    if !(mean.is_finite() && var.is_finite()) {
        return None;
    }
    let var = var.clamp(f64::MIN_POSITIVE, 1.0);
    let mean = inside(mean, a, b);
    Some((mean, var))
}

/// Pull `m` strictly into `(a, b)`.
fn inside(m: f64, a: f64, b: f64) -> f64 {
    let eps = 1e-12 * (1.0 + m.abs());
    let mut m = m;
    if a.is_finite() && m <= a {
        m = a + eps.min(0.5 * (b - a));
    }
    if b.is_finite() && m >= b {
        m = b - eps.min(0.5 * (b - a));
    }
    m
}

/// Extra passes over components pushed back out of bounds by a later,
/// correlated truncation.
const REPAIR_SWEEPS: usize = 8;

fn violates(mu: f64, lo: f64, hi: f64) -> bool {
    !(mu > lo && mu < hi)
}

/// Truncate component `i` of `out` in place.
fn truncate_component(out: &mut GaussianBelief, i: usize, lo: f64, hi: f64) -> Result<()> {
    let mu = out.mean[i];
    let var = out.cov[(i, i)];
    if !(var > 0.0) {
        // Degenerate component: nothing to redistribute, just keep it feasible.
        if mu <= lo || mu >= hi {
            out.mean[i] = nudge(mu, lo, hi);
        }
        return Ok(());
    }
    let s = var.sqrt();
    let (m, v) = truncated_normal_moments((lo - mu) / s, (hi - mu) / s).ok_or(Error::Truncation { index: i })?;
    let col = out.cov.column(i).into_owned();
    out.mean.axpy(m / s, &col, 1.0);
    out.cov.ger(-(1.0 - v) / var, &col, &col, 1.0);
    out.mean[i] = inside(mu + s * m, lo, hi);
    out.symmetrize();
    Ok(())
}

fn nudge(mu: f64, lo: f64, hi: f64) -> f64 {
    let half = if lo.is_finite() && hi.is_finite() { 0.5 * (hi - lo) } else { f64::INFINITY };
    let eps = (1e-9 * (1.0 + mu.abs())).min(half);
    if mu <= lo {
        lo + eps
    } else {
        hi - eps
    }
}

/// Project `b` onto `bounds`. The returned mean lies strictly inside every
/// finite interval; unconstrained components are left unchanged.
///
/// One pass truncates every bounded component in order. Because each step
/// also shifts correlated components, a later step can push an earlier mean
/// back out; those components are truncated again, and anything still
/// outside after [`REPAIR_SWEEPS`] passes is moved just inside its bound.
pub fn truncate(b: &GaussianBelief, bounds: &Bounds) -> Result<GaussianBelief> {
    if bounds.len() != b.dim() {
        return Err(domain("truncate", "bounds dimension mismatch"));
    }
    let (lower, upper) = (bounds.lower(), bounds.upper());
    let bounded: Vec<usize> = (0..b.dim())
        .filter(|&i| lower[i] > f64::NEG_INFINITY || upper[i] < f64::INFINITY)
        .collect();
    let mut out = b.clone();
    for &i in &bounded {
        truncate_component(&mut out, i, lower[i], upper[i])?;
    }
    for _ in 0..REPAIR_SWEEPS {
        let bad: Vec<usize> = bounded.iter().copied().filter(|&i| violates(out.mean[i], lower[i], upper[i])).collect();
        if bad.is_empty() {
            return Ok(out);
        }
        for i in bad {
            truncate_component(&mut out, i, lower[i], upper[i])?;
        }
    }
    for &i in &bounded {
        if violates(out.mean[i], lower[i], upper[i]) {
            out.mean[i] = nudge(out.mean[i], lower[i], upper[i]);
        }
    }
    Ok(out)
}
