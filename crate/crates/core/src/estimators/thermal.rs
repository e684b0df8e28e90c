//! Tissue/source parameter filter driven by isotherm width measurements.
//! State `[q_hat, c, lambda, rho]` follows a random walk.

use crate::error::{domain, Error, Result};
use crate::thermal_field::{isotherm_width, ThermalParams};
use crate::ukf::{default_spread, Bounds, GaussianBelief, TruncatedUkf};
use nalgebra::{DMatrix, DVector};

pub const IDX_Q_HAT: usize = 0;
pub const IDX_C: usize = 1;
pub const IDX_LAMBDA: usize = 2;
pub const IDX_RHO: usize = 3;

/// One pixel at 4.81 px/mm.
pub const DEFAULT_WIDTH_FLOOR: f64 = 1e-3 / 4.81;

#[derive(Debug, Clone)]
pub struct ThermalFilterConfig {
    pub prior: GaussianBelief,
    /// Random-walk noise per second.
    pub process_noise: DMatrix<f64>,
    /// Width measurement variance, m^2.
    pub meas_noise: f64,
    pub bounds: Bounds,
    pub d_cut: f64,
    pub t0: f64,
    pub tc: f64,
    /// Widths below this are censored by pixel quantisation and skipped.
    pub width_floor: f64,
    pub spread: f64,
}

impl ThermalFilterConfig {
    /// Prior centred on `nominal` with relative standard deviations
    /// `prior_rel`, random-walk rates `walk_rel` (relative, per sqrt second)
    /// and bounds `[nominal / 20, nominal * 20]`.
    pub fn relative(nominal: &ThermalParams, prior_rel: [f64; 4], walk_rel: [f64; 4], width_sd: f64) -> Result<Self> {
        let mean = DVector::from_vec(vec![nominal.q_hat(), nominal.c(), nominal.lambda(), nominal.rho()]);
        let var = DVector::from_fn(4, |i, _| (prior_rel[i] * mean[i]).powi(2));
        let walk = DVector::from_fn(4, |i, _| (walk_rel[i] * mean[i]).powi(2));
        let bounds = Bounds::new(&mean / 20.0, &mean * 20.0)?;
        let cfg = Self {
            prior: GaussianBelief::from_diagonal(mean, &var)?,
            process_noise: DMatrix::from_diagonal(&walk),
            meas_noise: width_sd * width_sd,
            bounds,
            d_cut: nominal.d_cut(),
            t0: nominal.t0(),
            tc: nominal.tc(),
            width_floor: DEFAULT_WIDTH_FLOOR,
            spread: default_spread(4),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        const OP: &str = "ThermalFilterConfig";
        if self.prior.dim() != 4 || self.process_noise.shape() != (4, 4) || self.bounds.len() != 4 {
            return Err(domain(OP, "expected a 4-dimensional filter"));
        }
        if self.bounds.lower().iter().any(|&l| !(l > 0.0)) {
            return Err(domain(OP, "all lower bounds must be > 0"));
        }
        if !self.bounds.contains_strictly(&self.prior.mean) {
            return Err(domain(OP, "prior mean outside bounds"));
        }
        if !(self.meas_noise > 0.0 && self.meas_noise.is_finite()) {
            return Err(domain(OP, format!("meas_noise = {}", self.meas_noise)));
        }
        let eig = self.process_noise.clone().symmetric_eigen();
        if eig.eigenvalues.iter().any(|&l| !(l >= -1e-15)) {
            return Err(domain(OP, "process_noise is not PSD"));
        }
        if !(self.d_cut > 0.0 && self.tc > self.t0 && self.width_floor >= 0.0 && self.spread > 0.0) {
            return Err(domain(OP, "d_cut, temperatures, width_floor or spread"));
        }
        Ok(())
    }

    /// Thermal model for parameter vector `theta`; components are clamped to
    /// their lower bounds so sigma points never leave the model's domain.
    pub fn params_for(&self, theta: &DVector<f64>) -> Result<ThermalParams> {
        let lo = self.bounds.lower();
        let g = |i: usize| theta[i].max(lo[i]);
        ThermalParams::new(g(IDX_LAMBDA), g(IDX_RHO), g(IDX_C), g(IDX_Q_HAT), self.d_cut)?
            .with_temperatures(self.t0, self.tc)
    }
}

#[derive(Debug, Clone)]
pub struct ThermalFilter {
    cfg: ThermalFilterConfig,
    ukf: TruncatedUkf,
}

/// Outcome of one thermal step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WidthUpdate {
    Applied,
    /// Measurement below the floor or non-finite; predict only.
    Skipped,
}

impl ThermalFilter {
    pub fn new(cfg: ThermalFilterConfig) -> Result<Self> {
        cfg.validate()?;
        let ukf = TruncatedUkf::new(cfg.prior.clone(), cfg.bounds.clone(), cfg.spread)?;
        Ok(Self { cfg, ukf })
    }

    pub fn config(&self) -> &ThermalFilterConfig {
        &self.cfg
    }

    pub fn belief(&self) -> &GaussianBelief {
        &self.ukf.belief
    }

    /// Posterior mean `[q_hat, c, lambda, rho]`.
    pub fn estimate(&self) -> [f64; 4] {
        let m = &self.ukf.belief.mean;
        [m[0], m[1], m[2], m[3]]
    }

    pub fn params(&self) -> Result<ThermalParams> {
        self.cfg.params_for(&self.ukf.belief.mean)
    }

    pub fn predicted_width(&self, u: f64) -> Result<f64> {
        isotherm_width(u, &self.params()?)
    }

    pub fn step(&mut self, u: f64, width_meas: f64, dt: f64) -> Result<WidthUpdate> {
        const OP: &str = "thermal_filter_step";
        if !(u.is_finite() && u > 0.0) {
            return Err(domain(OP, format!("u = {u}")));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(domain(OP, format!("dt = {dt}")));
        }
        if width_meas < 0.0 {
            return Err(domain(OP, format!("width = {width_meas}")));
        }
        let q = &self.cfg.process_noise * dt;
        self.ukf.predict(|x| x.clone(), &q)?;
        if !width_meas.is_finite() || width_meas < self.cfg.width_floor {
            return Ok(WidthUpdate::Skipped);
        }
        let cfg = &self.cfg;
        let mut failure = None;
        let h = |x: &DVector<f64>| {
            let w = cfg.params_for(x).and_then(|p| isotherm_width(u, &p));
            DVector::from_element(
                1,
                w.unwrap_or_else(|e| {
                    failure.get_or_insert(e);
                    f64::NAN
                }),
            )
        };
        let r = DMatrix::from_element(1, 1, cfg.meas_noise);
        let z = DVector::from_element(1, width_meas);
        let res = self.ukf.update(h, &r, &z);
        if let Some(e) = failure {
            return Err(Error::Model {
                velocity: u,
                source: Box::new(e),
            });
        }
        res?;
        Ok(WidthUpdate::Applied)
    }
}

/// One predict/update/truncate cycle; returns the posterior
/// `[q_hat, c, lambda, rho]`.
pub fn thermal_filter_step(filter: &mut ThermalFilter, u: f64, width_meas: f64, dt: f64) -> Result<[f64; 4]> {
    filter.step(u, width_meas, dt)?;
    Ok(filter.estimate())
}
