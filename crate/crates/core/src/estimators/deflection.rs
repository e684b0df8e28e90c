//! Tool-state filter: tip position and velocity, neutral position, the force
//! rate `C_defl` and optionally the force ceiling `d_max`.

use crate::error::{domain, Error, Result};
use crate::tool_dynamics::{self, ToolParams, ToolState};
use crate::ukf::{default_spread, Bounds, GaussianBelief, TruncatedUkf};
use nalgebra::{DMatrix, DVector, Vector2};

/// Index of `C_defl` in the filter state.
pub const IDX_C: usize = 6;
/// Index of `d_max` when it is estimated.
pub const IDX_D: usize = 7;

/// Measurement `[x_t, x_n]` from one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToolMeasurement {
    pub tip: Vector2<f64>,
    pub neutral: Vector2<f64>,
}

#[derive(Debug, Clone)]
pub struct DeflectionFilterConfig {
    /// Mass and stiffness of the process model; `d_max` and `c_defl` seed
    /// the prior (and fix `d_max` when it is not estimated).
    pub tool: ToolParams,
    pub estimate_d: bool,
    /// Process noise per second of elapsed time; scaled by `dt` each step.
    pub process_noise: DMatrix<f64>,
    /// 4x4 noise on `[x_t, x_n]`.
    pub meas_noise: DMatrix<f64>,
    pub bounds: Bounds,
    pub initial_variance: DVector<f64>,
    /// Integration step of the process model, s.
    pub substep: f64,
    pub spread: f64,
    /// Covariance trace above which the filter reports divergence.
    pub trace_ceiling: f64,
}

impl DeflectionFilterConfig {
    /// Diagonal noise settings given as standard deviations.
    ///
    /// `process_sd` holds per-sqrt-second rates for
    /// `[position, velocity, neutral, c_defl, d_max]`; `meas_sd` is
    /// `[tip, neutral]` in metres.
    pub fn diagonal(tool: ToolParams, estimate_d: bool, process_sd: [f64; 5], meas_sd: [f64; 2]) -> Result<Self> {
        tool.validate()?;
        let dim = if estimate_d { 8 } else { 7 };
        let [pos, vel, neu, c, d] = process_sd;
        let mut q = vec![pos, pos, vel, vel, neu, neu, c];
        if estimate_d {
            q.push(d);
        }
        let q = DVector::from_iterator(dim, q.into_iter().map(|s| s * s));
        let r = DVector::from_vec(vec![meas_sd[0], meas_sd[0], meas_sd[1], meas_sd[1]].into_iter().map(|s| s * s).collect());
        let mut init = vec![meas_sd[0], meas_sd[0], 1e-3, 1e-3, meas_sd[1], meas_sd[1], 0.3 * tool.c_defl];
        if estimate_d {
            init.push(0.3 * tool.d_max);
        }
        let init = DVector::from_iterator(dim, init.into_iter().map(|s| s * s));
        let mut bounds = Bounds::unbounded(dim).with(IDX_C, 1e-3 * tool.c_defl, 100.0 * tool.c_defl)?;
        if estimate_d {
            bounds = bounds.with(IDX_D, 1e-3 * tool.d_max, 100.0 * tool.d_max)?;
        }
        let cfg = Self {
            tool,
            estimate_d,
            process_noise: DMatrix::from_diagonal(&q),
            meas_noise: DMatrix::from_diagonal(&r),
            bounds,
            initial_variance: init,
            substep: 1e-3,
            spread: default_spread(dim),
            trace_ceiling: 1e6,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn dim(&self) -> usize {
        if self.estimate_d {
            8
        } else {
            7
        }
    }

    pub fn validate(&self) -> Result<()> {
        const OP: &str = "DeflectionFilterConfig";
        self.tool.validate()?;
        let d = self.dim();
        if self.process_noise.shape() != (d, d) || self.meas_noise.shape() != (4, 4) {
            return Err(domain(OP, "noise matrix shape"));
        }
        if self.bounds.len() != d || self.initial_variance.len() != d {
            return Err(domain(OP, "bounds or prior dimension"));
        }
        if !(self.bounds.lower()[IDX_C] > 0.0) {
            return Err(domain(OP, "c_defl lower bound must be > 0"));
        }
        for (name, m) in [("process_noise", &self.process_noise), ("meas_noise", &self.meas_noise)] {
            let eig = m.clone().symmetric_eigen();
            if eig.eigenvalues.iter().any(|&l| !(l >= -1e-15)) {
                return Err(domain(OP, format!("{name} is not PSD")));
            }
        }
        if !(self.substep > 0.0 && self.spread > 0.0 && self.trace_ceiling > 0.0) {
            return Err(domain(OP, "substep, spread and trace_ceiling must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DeflectionFilter {
    cfg: DeflectionFilterConfig,
    ukf: TruncatedUkf,
}

fn state_vector(s: &ToolState, d_max: Option<f64>) -> DVector<f64> {
    let mut v = vec![s.x_t.x, s.x_t.y, s.x_t_dot.x, s.x_t_dot.y, s.x_n.x, s.x_n.y, s.c_defl_hat];
    if let Some(d) = d_max {
        v.push(d);
    }
    DVector::from_vec(v)
}

fn tool_state(x: &DVector<f64>) -> ToolState {
    ToolState {
        x_t: Vector2::new(x[0], x[1]),
        x_t_dot: Vector2::new(x[2], x[3]),
        x_n: Vector2::new(x[4], x[5]),
        c_defl_hat: x[IDX_C],
    }
}

impl DeflectionFilter {
    /// Starts the filter at `initial` with `initial.c_defl_hat` and the
    /// config's `d_max` as parameter means.
    pub fn new(cfg: DeflectionFilterConfig, initial: &ToolState) -> Result<Self> {
        cfg.validate()?;
        let mean = state_vector(initial, cfg.estimate_d.then_some(cfg.tool.d_max));
        let belief = GaussianBelief::from_diagonal(mean, &cfg.initial_variance)?;
        let ukf = TruncatedUkf::new(belief, cfg.bounds.clone(), cfg.spread)?;
        Ok(Self { cfg, ukf })
    }

    pub fn config(&self) -> &DeflectionFilterConfig {
        &self.cfg
    }

    pub fn belief(&self) -> &GaussianBelief {
        &self.ukf.belief
    }

    pub fn state(&self) -> ToolState {
        tool_state(&self.ukf.belief.mean)
    }

    pub fn deflection(&self) -> f64 {
        tool_dynamics::deflection(&self.state())
    }

    pub fn c_defl(&self) -> f64 {
        self.ukf.belief.mean[IDX_C]
    }

    pub fn d_max(&self) -> f64 {
        if self.cfg.estimate_d {
            self.ukf.belief.mean[IDX_D]
        } else {
            self.cfg.tool.d_max
        }
    }

    /// Tool parameters with the current force-model estimates.
    pub fn tool_estimate(&self) -> ToolParams {
        ToolParams {
            d_max: self.d_max(),
            c_defl: self.c_defl(),
            ..self.cfg.tool
        }
    }

    /// Predict over `dt` at carriage speed `u`, then update with `z` when a
    /// measurement is available.
    pub fn step(&mut self, u: f64, z: Option<&ToolMeasurement>, dt: f64) -> Result<(ToolState, f64)> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(domain("deflection_filter_step", format!("dt = {dt}")));
        }
        if !u.is_finite() {
            return Err(domain("deflection_filter_step", format!("u = {u}")));
        }
        let n = (dt / self.cfg.substep).ceil().max(1.0) as usize;
        let h = dt / n as f64;
        let tool = self.cfg.tool;
        let estimate_d = self.cfg.estimate_d;
        let c_floor = self.cfg.bounds.lower()[IDX_C];
        let process = |x: &DVector<f64>| {
            let p = ToolParams {
                c_defl: x[IDX_C].max(c_floor),
                d_max: if estimate_d { x[IDX_D].max(0.0) } else { tool.d_max },
                ..tool
            };
            let mut s = tool_state(x);
            for _ in 0..n {
                s = tool_dynamics::step_unchecked(&s, u, h, &p);
            }
            let mut out = x.clone();
            out.rows_mut(0, 6).copy_from(&DVector::from_vec(vec![
                s.x_t.x, s.x_t.y, s.x_t_dot.x, s.x_t_dot.y, s.x_n.x, s.x_n.y,
            ]));
            out
        };
        let q = &self.cfg.process_noise * dt;
        self.ukf.predict(process, &q)?;
        if let Some(z) = z {
            let zv = DVector::from_vec(vec![z.tip.x, z.tip.y, z.neutral.x, z.neutral.y]);
            let measure = |x: &DVector<f64>| DVector::from_vec(vec![x[0], x[1], x[4], x[5]]);
            self.ukf.update(measure, &self.cfg.meas_noise, &zv)?;
        }
        let trace = self.ukf.belief.trace();
        if !(trace <= self.cfg.trace_ceiling) {
            return Err(Error::Divergence {
                trace,
                ceiling: self.cfg.trace_ceiling,
            });
        }
        let s = self.state();
        Ok((s, tool_dynamics::deflection(&s)))
    }
}

/// One predict/update/truncate cycle; see [`DeflectionFilter::step`].
pub fn deflection_filter_step(
    filter: &mut DeflectionFilter,
    u: f64,
    z: Option<&ToolMeasurement>,
    dt: f64,
) -> Result<(ToolState, f64)> {
    filter.step(u, z, dt)
}
