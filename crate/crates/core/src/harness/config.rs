//! TOML configuration: the simulator calibration, single-trial scenarios
//! and trial suites.

use crate::error::{Error, Result};
use crate::estimators::{DeflectionFilterConfig, ThermalFilterConfig};
use crate::sim_phantom::PhantomProfile;
use crate::thermal_field::{SensorModel, ThermalParams};
use crate::tool_dynamics::ToolParams;
use crate::velocity_optimizer::{CostWeights, SlackPenalty};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// The shipped calibration, compiled in.
pub const DEFAULT_CALIBRATION: &str = include_str!("../../configs/calibration.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TissueSection {
    pub lambda: f64,
    pub rho: f64,
    pub c: f64,
    pub esu_power: f64,
    pub efficiency: f64,
    pub d_cut: f64,
    pub t0: f64,
    pub tc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolSection {
    pub m: f64,
    pub k: f64,
    pub d_max: f64,
    pub c_defl: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorSection {
    pub tau: f64,
    pub noise_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSection {
    pub height: f64,
    pub force_multiplier: f64,
    pub q_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomSection {
    pub transition: f64,
    pub force_jitter: f64,
    pub step_2mm: StepSection,
    pub step_3mm: StepSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeflectionFilterSection {
    pub estimate_d: bool,
    pub process_sd: [f64; 5],
    pub meas_sd: [f64; 2],
    pub substep: f64,
    pub trace_ceiling: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalFilterSection {
    pub prior_rel: [f64; 4],
    pub walk_rel: [f64; 4],
    pub width_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSection {
    pub deflection: DeflectionFilterSection,
    pub thermal: ThermalFilterSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlackForm {
    Squared,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSection {
    pub frame_rate: f64,
    pub accel_cap: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub r: f64,
    pub v_bar: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub slack: SlackForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialSection {
    pub cut_length: f64,
    pub failure_deflection: f64,
    pub substep: f64,
    pub neutral_sd: f64,
}

/// Every tunable number of the simulator and controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Calibration {
    pub tissue: TissueSection,
    pub tool: ToolSection,
    pub sensor: SensorSection,
    pub phantom: PhantomSection,
    pub filter: FilterSection,
    pub control: ControlSection,
    pub trial: TrialSection,
}

impl Default for Calibration {
    fn default() -> Self {
        Self::from_toml(DEFAULT_CALIBRATION).expect("shipped calibration parses")
    }
}

fn config_err(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

impl Calibration {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(config_err)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Nominal tissue with `q_hat = efficiency * esu_power / d_cut`.
    pub fn tissue(&self) -> Result<ThermalParams> {
        let t = &self.tissue;
        let q_hat = t.efficiency * t.esu_power / t.d_cut;
        ThermalParams::new(t.lambda, t.rho, t.c, q_hat, t.d_cut)?.with_temperatures(t.t0, t.tc)
    }

    pub fn tool(&self) -> Result<ToolParams> {
        let t = &self.tool;
        let p = ToolParams {
            m: t.m,
            k: t.k,
            d_max: t.d_max,
            c_defl: t.c_defl,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn sensor(&self) -> Result<SensorModel> {
        let s = SensorModel {
            tau: self.sensor.tau,
            noise_sigma: self.sensor.noise_sigma,
            ..SensorModel::microbolometer()
        };
        s.validate()?;
        Ok(s)
    }

    pub fn weights(&self) -> Result<CostWeights> {
        let c = &self.control;
        let w = CostWeights {
            a: c.a,
            b: c.b,
            c: c.c,
            r: c.r,
            v_bar: c.v_bar,
            v_min: c.v_min,
            v_max: c.v_max,
            slack: match c.slack {
                SlackForm::Squared => SlackPenalty::Squared,
                SlackForm::Linear => SlackPenalty::Linear,
            },
        };
        w.validate()?;
        Ok(w)
    }

    pub fn deflection_filter(&self) -> Result<DeflectionFilterConfig> {
        let f = &self.filter.deflection;
        let mut cfg = DeflectionFilterConfig::diagonal(self.tool()?, f.estimate_d, f.process_sd, f.meas_sd)?;
        cfg.substep = f.substep;
        cfg.trace_ceiling = f.trace_ceiling;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn thermal_filter(&self) -> Result<ThermalFilterConfig> {
        let f = &self.filter.thermal;
        ThermalFilterConfig::relative(&self.tissue()?, f.prior_rel, f.walk_rel, f.width_sd)
    }

    /// Phantom of `kind` with the force multiplier jittered per `seed`.
    pub fn phantom(&self, kind: PhantomKind, seed: u64) -> Result<PhantomProfile> {
        let base = self.tissue()?;
        let step = match kind {
            PhantomKind::Flat => return Ok(PhantomProfile::flat(base)),
            PhantomKind::Step2mm => &self.phantom.step_2mm,
            PhantomKind::Step3mm => &self.phantom.step_3mm,
        };
        let jitter = if self.phantom.force_jitter > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5048_414e_544f_4d00);
            LogNormal::new(0.0, self.phantom.force_jitter).map_err(config_err)?.sample(&mut rng)
        } else {
            1.0
        };
        let multiplier = (step.force_multiplier * jitter).max(1.0);
        PhantomProfile::stepped(base, step.height, multiplier, step.q_scale, self.phantom.transition)
    }

    pub fn validate(&self) -> Result<()> {
        self.tissue()?;
        self.sensor()?;
        self.weights()?;
        self.deflection_filter()?;
        self.thermal_filter()?;
        let c = &self.control;
        let t = &self.trial;
        let positive = [
            ("control.frame_rate", c.frame_rate),
            ("control.accel_cap", c.accel_cap),
            ("trial.failure_deflection", t.failure_deflection),
            ("trial.substep", t.substep),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} = {v}, expected > 0")));
            }
        }
        if !(t.cut_length >= 0.0 && t.neutral_sd >= 0.0 && self.phantom.force_jitter >= 0.0) {
            return Err(Error::Config("cut_length, neutral_sd and force_jitter must be >= 0".into()));
        }
        for kind in [PhantomKind::Step2mm, PhantomKind::Step3mm] {
            let p = self.phantom(kind, 0)?;
            if t.cut_length > p.length {
                return Err(Error::Config(format!("cut_length {} exceeds phantom length {}", t.cut_length, p.length)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PhantomKind {
    #[serde(rename = "flat")]
    Flat,
    #[serde(rename = "step_2mm")]
    Step2mm,
    #[serde(rename = "step_3mm")]
    Step3mm,
}

impl PhantomKind {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Flat => "flat",
            Self::Step2mm => "step_2mm",
            Self::Step3mm => "step_3mm",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ControllerSpec {
    /// Fixed carriage velocity, m/s.
    Constant { velocity: f64 },
    /// Velocity chosen by the cost optimiser every frame.
    Thermo,
}

impl ControllerSpec {
    pub fn label(&self) -> String {
        match self {
            Self::Constant { velocity } => format!("const_{:.0}mm_s", velocity * 1e3),
            Self::Thermo => "thermo".into(),
        }
    }
}

/// One scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    pub controller: ControllerSpec,
    pub phantom: PhantomKind,
    pub seed: u64,
    /// Optional calibration file, relative to the scenario file.
    #[serde(default)]
    pub calibration: Option<PathBuf>,
    #[serde(default)]
    pub cut_length: Option<f64>,
}

/// A controllers x phantoms x repetitions matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteFile {
    pub name: String,
    pub controllers: Vec<ControllerSpec>,
    pub phantoms: Vec<PhantomKind>,
    pub repetitions: u32,
    /// Repetition `i` of every cell uses seed `base_seed + i`.
    pub base_seed: u64,
    #[serde(default)]
    pub calibration: Option<PathBuf>,
    #[serde(default)]
    pub cut_length: Option<f64>,
}

fn load_calibration(rel: &Option<PathBuf>, base: &Path) -> Result<Calibration> {
    let cal = match rel {
        Some(p) => Calibration::from_file(&base.join(p))?,
        None => Calibration::default(),
    };
    cal.validate()?;
    Ok(cal)
}

fn read_config(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

impl ScenarioFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(config_err)
    }

    pub fn load(path: &Path) -> Result<(Self, Calibration)> {
        let s = Self::from_toml(&read_config(path)?)?;
        let cal = load_calibration(&s.calibration, path.parent().unwrap_or(Path::new(".")))?;
        Ok((s, cal))
    }
}

impl SuiteFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Self = toml::from_str(text).map_err(config_err)?;
        if s.controllers.is_empty() || s.phantoms.is_empty() || s.repetitions == 0 {
            return Err(Error::Config("suite needs controllers, phantoms and repetitions".into()));
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<(Self, Calibration)> {
        let s = Self::from_toml(&read_config(path)?)?;
        let cal = load_calibration(&s.calibration, path.parent().unwrap_or(Path::new(".")))?;
        Ok((s, cal))
    }
}
