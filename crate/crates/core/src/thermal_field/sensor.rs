//! First-order microbolometer response and the lumped tissue time constant.

use crate::error::{domain, Result};

/// Published lumped time constant for a 1 mm^3 tongue element, in seconds.
/// Direct evaluation of `rho c V / (h A)` with the same constants gives
/// 1242.96 s; [`TissueTimeConstantCheck`] reports the gap.
pub const REFERENCE_TISSUE_TAU_S: f64 = 1254.4;

/// Thermal camera response model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorModel {
    /// First-order time constant, s.
    pub tau: f64,
    /// Per-pixel Gaussian noise standard deviation, degC.
    pub noise_sigma: f64,
    /// Worst observed absolute error, degC.
    pub max_error: f64,
}

impl SensorModel {
    /// 384x288 microbolometer characterised against a 50 degC black body.
    pub const fn microbolometer() -> Self {
        Self {
            tau: 0.0176,
            noise_sigma: 0.32,
            max_error: 1.4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(domain("SensorModel", format!("tau = {}", self.tau)));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(domain("SensorModel", format!("noise_sigma = {}", self.noise_sigma)));
        }
        Ok(())
    }

    /// Fraction of the previous reading retained after `dt`.
    pub fn retention(&self, dt: f64) -> f64 {
        (-dt / self.tau).exp()
    }
}

impl Default for SensorModel {
    fn default() -> Self {
        Self::microbolometer()
    }
}

/// Exact discrete solution of `dT/dt = (T_true - T) / tau` over `dt`.
pub fn sensor_step(t_meas_prev: f64, t_true: f64, dt: f64, s: &SensorModel) -> Result<f64> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(domain("sensor_step", format!("dt = {dt}")));
    }
    if !(t_meas_prev.is_finite() && t_true.is_finite()) {
        return Err(domain("sensor_step", "non-finite temperature"));
    }
    Ok(t_true + (t_meas_prev - t_true) * s.retention(dt))
}

/// Lumped thermal time constant `rho c_p V / (h A_s)` in seconds.
pub fn tissue_time_constant(rho: f64, c_p: f64, volume: f64, h: f64, area: f64) -> Result<f64> {
    for (name, v) in [("rho", rho), ("c_p", c_p), ("V", volume), ("h", h), ("A_s", area)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(domain("tissue_time_constant", format!("{name} = {v}")));
        }
    }
    Ok(rho * c_p * volume / (h * area))
}

/// Formula value of the tongue time constant next to the published figure.
#[derive(Debug, Clone, Copy)]
pub struct TissueTimeConstantCheck {
    pub formula_s: f64,
    pub reference_s: f64,
}

impl TissueTimeConstantCheck {
    /// rho = 1090 kg/m^3, c_p = 3421 J/(kg K), h = 3 W/(m^2 K), 1 mm^3 element
    /// with 1 mm^2 exposed surface.
    pub fn tongue() -> Self {
        let formula_s = tissue_time_constant(1090.0, 3421.0, 1e-9, 3.0, 1e-6)
            .expect("constants are positive");
        Self {
            formula_s,
            reference_s: REFERENCE_TISSUE_TAU_S,
        }
    }

    pub fn relative_discrepancy(&self) -> f64 {
        (self.reference_s - self.formula_s) / self.formula_s
    }

    pub fn summary(&self) -> String {
        format!(
            "tissue time constant: formula {:.2} s, published {:.1} s, discrepancy {:+.2}%",
            self.formula_s,
            self.reference_s,
            100.0 * self.relative_discrepancy()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_time_constant_step() {
        let s = SensorModel::microbolometer();
        let t = sensor_step(20.0, 50.0, s.tau, &s).unwrap();
        assert!((t - 38.96).abs() < 0.01, "t = {t}");
    }

    #[test]
    fn settles_for_long_steps() {
        let s = SensorModel::microbolometer();
        let t = sensor_step(20.0, 50.0, 10.0, &s).unwrap();
        assert!((t - 50.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_dt() {
        let s = SensorModel::microbolometer();
        assert!(sensor_step(20.0, 50.0, 0.0, &s).is_err());
        assert!(sensor_step(f64::NAN, 50.0, 0.1, &s).is_err());
    }

    #[test]
    fn tongue_time_constant() {
        let check = TissueTimeConstantCheck::tongue();
        assert!((check.formula_s - 1242.96).abs() < 0.01);
        assert!(check.relative_discrepancy() > 0.0 && check.relative_discrepancy() < 0.01);
        let doubled = tissue_time_constant(1090.0, 3421.0, 2e-9, 3.0, 1e-6).unwrap();
        assert_eq!(doubled, 2.0 * check.formula_s);
        assert!(tissue_time_constant(1090.0, 3421.0, 0.0, 3.0, 1e-6).is_err());
    }
}
