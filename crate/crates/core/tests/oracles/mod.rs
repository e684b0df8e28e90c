//! Independent reference computations shared by the integration tests and
//! the acceptance suite.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};
use thermocut::thermal_field::{isotherm_width, temperature_at, ThermalParams};
use thermocut::tool_dynamics::{cutting_force, ToolParams};
use thermocut::velocity_optimizer::{cost, CostWeights};

pub fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> DMatrix<f64> {
    let u = Uniform::new(-scale, scale).unwrap();
    DMatrix::from_fn(r, c, |_, _| u.sample(rng))
}

pub fn random_spd(rng: &mut ChaCha8Rng, d: usize, floor: f64) -> DMatrix<f64> {
    let a = random_matrix(rng, d, d, 1.0);
    &a * a.transpose() + DMatrix::identity(d, d) * floor
}

/// Textbook Kalman filter, one predict + update.
pub fn kalman(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    f: &DMatrix<f64>,
    q: &DMatrix<f64>,
    h: &DMatrix<f64>,
    r: &DMatrix<f64>,
    z: &DVector<f64>,
) -> (DVector<f64>, DMatrix<f64>) {
    let m = f * mean;
    let p = f * cov * f.transpose() + q;
    let s = h * &p * h.transpose() + r;
    let k = &p * h.transpose() * s.try_inverse().unwrap();
    let mean = &m + &k * (z - h * &m);
    let cov = &p - &k * h * &p;
    (mean, cov)
}

/// `K0(x) = int_0^inf exp(-x cosh t) dt`, trapezoid rule. The integrand is
/// analytic and decays doubly exponentially, so the trapezoid rule converges
/// geometrically in the step.
pub fn k0_quadrature(x: f64) -> f64 {
    let h: f64 = 1.0 / 64.0;
    let mut sum = 0.5 * (-x).exp();
    let mut t = h;
    loop {
        let v = (-x * t.cosh()).exp();
        sum += v;
        if v < 1e-300 || v < sum * 1e-18 {
            break;
        }
        t += h;
    }
    sum * h
}

/// Contour half-width by bisection on the analytic field, maximised over a
/// fine grid along travel.
pub fn contour_width(u: f64, p: &ThermalParams) -> f64 {
    let tc = p.tc();
    let scale = 2.0 * p.alpha() / u;
    let mut best: f64 = 0.0;
    let half_y = |xi: f64| {
        let hot = |y: f64| temperature_at(xi, y, u, p).map_or(true, |t| t > tc);
        if !hot(1e-9 * scale) {
            return 0.0;
        }
        let (mut lo, mut hi) = (1e-9 * scale, 20.0 * scale);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if hot(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    for i in 0..=4000 {
        let xi = -20.0 * scale + i as f64 * (21.0 * scale / 4000.0);
        best = best.max(half_y(xi));
    }
    2.0 * best
}

/// Brute-force argmin of the cost over `n` evenly spaced speeds.
pub fn grid_argmin(v_prev: f64, w: &CostWeights, tool: &ToolParams, theta: &ThermalParams, n: usize) -> f64 {
    let mut best = (f64::INFINITY, f64::NAN);
    for i in 0..n {
        let v = w.v_min + (w.v_max - w.v_min) * i as f64 / (n - 1) as f64;
        let j = cost(v, v_prev, w, |u| cutting_force(u, tool), |u| isotherm_width(u, theta)).unwrap();
        if j < best.0 {
            best = (j, v);
        }
    }
    best.1
}

