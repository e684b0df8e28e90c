//! Tool-tip mechanics: a mass on a spring dragged through tissue by the
//! carriage, loaded by a velocity-dependent cutting force.
//!
//! Positions live in the carriage (camera) frame, travel along +x. The
//! cutting force acts along -x only.

use crate::error::{domain, Result};
use nalgebra::Vector2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToolParams {
    /// Effective tip mass, kg.
    pub m: f64,
    /// Tool mechanical stiffness, N/m.
    pub k: f64,
    /// Force magnitude the cut saturates at, N.
    pub d_max: f64,
    /// Velocity scale of force growth, m/s.
    pub c_defl: f64,
}

impl ToolParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("m", self.m), ("k", self.k), ("d_max", self.d_max), ("c_defl", self.c_defl)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(domain("ToolParams", format!("{name} = {v}")));
            }
        }
        Ok(())
    }

    pub fn natural_frequency(&self) -> f64 {
        (self.k / self.m).sqrt()
    }
}

/// `[x_t, x_t_dot, x_n, c_defl_hat]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToolState {
    pub x_t: Vector2<f64>,
    pub x_t_dot: Vector2<f64>,
    pub x_n: Vector2<f64>,
    pub c_defl_hat: f64,
}

impl ToolState {
    pub fn at_rest(x_n: Vector2<f64>, c_defl_hat: f64) -> Self {
        Self {
            x_t: x_n,
            x_t_dot: Vector2::zeros(),
            x_n,
            c_defl_hat,
        }
    }

    /// Static equilibrium for a carriage moving steadily at `u`.
    pub fn equilibrium(x_n: Vector2<f64>, u: f64, p: &ToolParams) -> Result<Self> {
        let f = cutting_force(u, p)?;
        Ok(Self {
            x_t: x_n + Vector2::new(f / p.k, 0.0),
            x_t_dot: Vector2::zeros(),
            x_n,
            c_defl_hat: p.c_defl,
        })
    }

    pub fn is_finite(&self) -> bool {
        self.x_t.iter().chain(self.x_t_dot.iter()).chain(self.x_n.iter()).all(|v| v.is_finite())
            && self.c_defl_hat.is_finite()
    }
}

#[inline]
fn force_unchecked(u: f64, d_max: f64, c_defl: f64) -> f64 {
    if u > 0.0 {
        -d_max * (-c_defl / u).exp()
    } else {
        0.0
    }
}

/// Cutting force (N, negative: opposes travel) at cutting speed `u`.
pub fn cutting_force(u: f64, p: &ToolParams) -> Result<f64> {
    if !(u >= 0.0) {
        return Err(domain("cutting_force", format!("u = {u}, expected u >= 0")));
    }
    Ok(force_unchecked(u, p.d_max, p.c_defl))
}

/// Steady-state deflection `(d_max / k) exp(-c_defl / u)` in metres.
pub fn equilibrium_deflection(u: f64, p: &ToolParams) -> Result<f64> {
    Ok(-cutting_force(u, p)? / p.k)
}

/// One Euler step of the tip dynamics with the carriage at `u`.
///
/// Position advances with the current velocity, then velocity advances with
/// the spring force at the new position (semi-implicit ordering, stable for
/// `omega dt < 2`). The cutting force is evaluated at the tip's speed through
/// the tissue: `u` plus the tip's own axial velocity, floored at zero. `x_n`
/// and `c_defl_hat` are carried unchanged.
pub fn step(state: &ToolState, u: f64, dt: f64, p: &ToolParams) -> Result<ToolState> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(domain("step", format!("dt = {dt}")));
    }
    Ok(step_unchecked(state, u, dt, p))
}

#[inline]
pub(crate) fn step_unchecked(state: &ToolState, u: f64, dt: f64, p: &ToolParams) -> ToolState {
    let cut_speed = (u + state.x_t_dot.x).max(0.0);
    let f = force_unchecked(cut_speed, p.d_max, p.c_defl);
    let x_t = state.x_t + dt * state.x_t_dot;
    let accel = (-p.k * (x_t - state.x_n) + Vector2::new(f, 0.0)) / p.m;
    ToolState {
        x_t,
        x_t_dot: state.x_t_dot + dt * accel,
        x_n: state.x_n,
        c_defl_hat: state.c_defl_hat,
    }
}

/// Euclidean deflection `|x_t - x_n|`.
pub fn deflection(state: &ToolState) -> f64 {
    (state.x_t - state.x_n).norm()
}
