//! One simulated cut: ground-truth tool and camera, both filters, and the
//! velocity controller, stepped at the frame rate.

use super::config::{Calibration, ControllerSpec, PhantomKind};
use crate::error::{Error, Result};
use crate::estimators::deflection_index::{IDX_C, IDX_D};
use crate::estimators::{DeflectionFilter, DeflectionFilterConfig, ThermalFilter, ThermalFilterConfig, ToolMeasurement};
use crate::sim_phantom::{measure_frame, render_frame_roi, PhantomProfile, ThermalFrame, WorldState};
use crate::thermal_field::{isotherm_lead, isotherm_width, SensorModel};
use crate::tool_dynamics::{self, cutting_force, ToolParams, ToolState};
use crate::velocity_optimizer::{optimize_velocity, CostWeights};
use nalgebra::Vector2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::path::PathBuf;

/// Fully resolved settings of one trial.
#[derive(Debug, Clone)]
pub struct TrialConfig {
    pub controller: ControllerSpec,
    pub phantom_kind: PhantomKind,
    pub phantom: PhantomProfile,
    pub dt_control: f64,
    pub frame_rate: f64,
    pub cut_length: f64,
    pub failure_deflection: f64,
    pub seed: u64,
    pub weights: CostWeights,
    pub accel_cap: f64,
    pub tool: ToolParams,
    pub sensor: SensorModel,
    pub deflection_filter: DeflectionFilterConfig,
    pub thermal_filter: ThermalFilterConfig,
    /// Ground-truth integration step, s.
    pub substep: f64,
    pub neutral_sd: f64,
    /// Write every n-th frame as PGM into `frame_dir`.
    pub frame_dump: Option<(PathBuf, usize)>,
}

impl TrialConfig {
    pub fn new(cal: &Calibration, controller: ControllerSpec, phantom_kind: PhantomKind, seed: u64) -> Result<Self> {
        cal.validate()?;
        let frame_rate = cal.control.frame_rate;
        let cfg = Self {
            controller,
            phantom_kind,
            phantom: cal.phantom(phantom_kind, seed)?,
            dt_control: 1.0 / frame_rate,
            frame_rate,
            cut_length: cal.trial.cut_length,
            failure_deflection: cal.trial.failure_deflection,
            seed,
            weights: cal.weights()?,
            accel_cap: cal.control.accel_cap,
            tool: cal.tool()?,
            sensor: cal.sensor()?,
            deflection_filter: cal.deflection_filter()?,
            thermal_filter: cal.thermal_filter()?,
            substep: cal.trial.substep,
            neutral_sd: cal.trial.neutral_sd,
            frame_dump: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.dt_control > 0.0 && self.frame_rate > 0.0) {
            return bad(format!("dt_control = {}, frame_rate = {}", self.dt_control, self.frame_rate));
        }
        if !(self.cut_length >= 0.0 && self.cut_length <= self.phantom.length) {
            return bad(format!("cut_length = {} outside [0, {}]", self.cut_length, self.phantom.length));
        }
        if !(self.failure_deflection > 0.0 && self.substep > 0.0 && self.substep <= self.dt_control) {
            return bad("failure_deflection and substep must be > 0, substep <= dt_control".into());
        }
        if !(self.accel_cap > 0.0 && self.neutral_sd >= 0.0) {
            return bad("accel_cap must be > 0 and neutral_sd >= 0".into());
        }
        if let ControllerSpec::Constant { velocity } = self.controller {
            if !(velocity > 0.0 && velocity.is_finite()) {
                return bad(format!("constant velocity {velocity}"));
            }
        }
        self.phantom.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.weights.validate()
    }

    pub fn label(&self) -> String {
        format!("{}__{}__seed{}", self.controller.label(), self.phantom_kind.label(), self.seed)
    }
}

/// One control tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    /// Carriage position along the phantom, m.
    pub position: f64,
    /// Velocity commanded for the coming tick, m/s.
    pub velocity: f64,
    pub true_deflection: f64,
    pub est_deflection: f64,
    /// Measured isotherm width, m (0 when nothing is hot).
    pub width: f64,
    /// Width predicted by the thermal filter at the current velocity, m.
    pub predicted_width: f64,
    pub q_hat: f64,
    pub c: f64,
    pub lambda: f64,
    pub rho: f64,
    pub c_defl_hat: f64,
    pub d_max_hat: f64,
    /// Thermal filter covariance diagonal.
    pub thermal_var: [f64; 4],
    /// Variances of `C_defl` and `d_max` in the deflection filter.
    pub force_var: [f64; 2],
}

impl TraceRow {
    pub const HEADER: &'static str = "t_s,position_m,velocity_m_s,true_deflection_m,est_deflection_m,width_m,predicted_width_m,\
q_hat_W_m,c_J_kgK,lambda_W_mK,rho_kg_m3,c_defl_hat_m_s,d_max_hat_N,\
var_q_hat,var_c,var_lambda,var_rho,var_c_defl,var_d_max";

    pub fn values(&self) -> [f64; 19] {
        [
            self.t,
            self.position,
            self.velocity,
            self.true_deflection,
            self.est_deflection,
            self.width,
            self.predicted_width,
            self.q_hat,
            self.c,
            self.lambda,
            self.rho,
            self.c_defl_hat,
            self.d_max_hat,
            self.thermal_var[0],
            self.thermal_var[1],
            self.thermal_var[2],
            self.thermal_var[3],
            self.force_var[0],
            self.force_var[1],
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureCause {
    Deflection,
    FilterDivergence,
    Timeout,
}

impl FailureCause {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Deflection => "deflection",
            Self::FilterDivergence => "filter_divergence",
            Self::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrialResult {
    pub label: String,
    pub controller: ControllerSpec,
    pub phantom_kind: PhantomKind,
    pub seed: u64,
    pub success: bool,
    pub failure_position: Option<f64>,
    pub failure_cause: Option<FailureCause>,
    pub failure_detail: Option<String>,
    pub traces: Vec<TraceRow>,
    pub optimizer_calls: usize,
    /// Raised-segment starts and step height, for the rejection metric.
    pub step_starts: Vec<f64>,
    pub step_height: f64,
}

impl TrialResult {
    pub fn peak_deflection(&self) -> f64 {
        self.traces.iter().map(|r| r.true_deflection).fold(0.0, f64::max)
    }

    pub fn mean_of(&self, f: impl Fn(&TraceRow) -> f64) -> f64 {
        if self.traces.is_empty() {
            return f64::NAN;
        }
        self.traces.iter().map(f).sum::<f64>() / self.traces.len() as f64
    }

    /// RMS error of the filtered deflection against ground truth.
    pub fn deflection_rmse(&self) -> f64 {
        self.mean_of(|r| (r.est_deflection - r.true_deflection).powi(2)).sqrt()
    }
}

/// Seeds for per-frame noise, decorrelated from the trial seed.
fn frame_seed(seed: u64, frame: u64) -> u64 {
    let mut z = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ frame.wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn rate_limit(target: f64, current: f64, max_change: f64, w: &CostWeights) -> f64 {
    target.clamp(current - max_change, current + max_change).clamp(w.v_min, w.v_max)
}

fn constant_speed(cfg: &TrialConfig) -> Option<f64> {
    match cfg.controller {
        ControllerSpec::Constant { velocity } => Some(velocity),
        ControllerSpec::Thermo => None,
    }
}

/// Runs one trial to completion or failure. Deterministic per config.
pub fn run_trial(cfg: &TrialConfig) -> Result<TrialResult> {
    cfg.validate()?;
    let mut result = TrialResult {
        label: cfg.label(),
        controller: cfg.controller,
        phantom_kind: cfg.phantom_kind,
        seed: cfg.seed,
        success: true,
        failure_position: None,
        failure_cause: None,
        failure_detail: None,
        traces: Vec::new(),
        optimizer_calls: 0,
        step_starts: cfg.phantom.step_starts(),
        step_height: cfg.phantom.step_height,
    };
    if cfg.cut_length == 0.0 {
        return Ok(result);
    }

    let dt = cfg.dt_control;
    let w = cfg.weights;
    let fixed = constant_speed(cfg);
    let mut v = fixed.unwrap_or(w.v_bar).clamp(w.v_min, w.v_max);
    let x_n = Vector2::zeros();
    let start_tool = ToolParams {
        d_max: cfg.tool.d_max * cfg.phantom.force_multiplier_at(0.0)?,
        ..cfg.tool
    };
    let mut truth = ToolState::equilibrium(x_n, v, &start_tool)?;
    let mut dfilter = DeflectionFilter::new(cfg.deflection_filter.clone(), &ToolState::equilibrium(x_n, v, &cfg.tool)?)?;
    let mut tfilter = ThermalFilter::new(cfg.thermal_filter.clone())?;
    let t0 = cfg.phantom.params_at(0.0)?.tissue.t0();
    let tc = cfg.phantom.params_at(0.0)?.tissue.tc();
    let mut frame = ThermalFrame::uniform(t0, 0.0);
    let mut neutral_rng = ChaCha8Rng::seed_from_u64(frame_seed(cfg.seed, u64::MAX));
    let neutral_noise = Normal::new(0.0, cfg.neutral_sd).map_err(|e| Error::Config(e.to_string()))?;

    let n_sub = (dt / cfg.substep).round().max(1.0) as usize;
    let h = dt / n_sub as f64;
    let max_ticks = (10.0 * cfg.cut_length / w.v_min.min(v) / dt).ceil() as u64;
    let mut position: f64 = 0.0;

    for tick in 1..=max_ticks {
        // Ground truth over one control period at the held command.
        for _ in 0..n_sub {
            let x = position.min(cfg.phantom.length);
            let p = ToolParams {
                d_max: cfg.tool.d_max * cfg.phantom.force_multiplier_at(x)?,
                ..cfg.tool
            };
            truth = tool_dynamics::step_unchecked(&truth, v, h, &p);
            position += v * h;
        }
        let t = tick as f64 * dt;
        let true_deflection = tool_dynamics::deflection(&truth);
        let tissue = cfg.phantom.tissue_at(position.min(cfg.phantom.length))?;

        let world = WorldState {
            tip: truth.x_t,
            u: v,
            tissue,
            timestamp: t,
        };
        frame = render_frame_roi(&world, &frame, dt, &cfg.sensor, frame_seed(cfg.seed, tick))?;
        if let Some((dir, every)) = &cfg.frame_dump {
            if tick % (*every as u64).max(1) == 0 {
                crate::sim_phantom::write_pgm(&dir.join(format!("{}_{tick:06}.pgm", cfg.label())), &frame)?;
            }
        }
        let (width, tip) = measure_frame(&frame, tc);

        let mut failure = None;
        if let Err(e) = tfilter.step(v, width, dt) {
            failure = Some((FailureCause::FilterDivergence, e));
        }
        let theta = tfilter.params()?;
        let z = match tip {
            Some(tip) => {
                let lead = isotherm_lead(v, &theta)?;
                let noisy = Vector2::new(neutral_noise.sample(&mut neutral_rng), neutral_noise.sample(&mut neutral_rng));
                Some(ToolMeasurement {
                    tip: tip - Vector2::new(lead, 0.0),
                    neutral: x_n + noisy,
                })
            }
            None => None,
        };
        if failure.is_none() {
            if let Err(e) = dfilter.step(v, z.as_ref(), dt) {
                failure = Some((FailureCause::FilterDivergence, e));
            }
        }

        let target = match (fixed, &failure) {
            (Some(c), _) => c,
            (None, Some(_)) => v,
            (None, None) => {
                result.optimizer_calls += 1;
                let tool_est = dfilter.tool_estimate();
                optimize_velocity(
                    v,
                    &w,
                    |u| cutting_force(u, &tool_est),
                    |u| isotherm_width(u, &theta),
                )?
            }
        };
        let next_v = rate_limit(target, v, cfg.accel_cap * dt, &w);

        let est = dfilter.state();
        let tb = tfilter.belief();
        let db = dfilter.belief();
        let force_var = [
            db.cov[(IDX_C, IDX_C)],
            if cfg.deflection_filter.estimate_d { db.cov[(IDX_D, IDX_D)] } else { 0.0 },
        ];
        let [q_hat, c, lambda, rho] = tfilter.estimate();
        result.traces.push(TraceRow {
            t,
            position,
            velocity: next_v,
            true_deflection,
            est_deflection: tool_dynamics::deflection(&est),
            width,
            predicted_width: isotherm_width(v, &theta)?,
            q_hat,
            c,
            lambda,
            rho,
            c_defl_hat: dfilter.c_defl(),
            d_max_hat: dfilter.d_max(),
            thermal_var: [tb.cov[(0, 0)], tb.cov[(1, 1)], tb.cov[(2, 2)], tb.cov[(3, 3)]],
            force_var,
        });

        if true_deflection > cfg.failure_deflection {
            return Ok(fail(result, position, FailureCause::Deflection, None));
        }
        if let Some((cause, e)) = failure {
            return Ok(fail(result, position, cause, Some(e.to_string())));
        }
        if position >= cfg.cut_length {
            return Ok(result);
        }
        v = next_v;
    }
    Ok(fail(result, position, FailureCause::Timeout, None))
}

fn fail(mut r: TrialResult, position: f64, cause: FailureCause, detail: Option<String>) -> TrialResult {
    r.success = false;
    r.failure_position = Some(position);
    r.failure_cause = Some(cause);
    r.failure_detail = detail;
    r
}
