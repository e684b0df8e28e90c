//! Quasi-stationary temperature field of a heat source moving along +x
//! through a conducting plane, and the isotherm geometry derived from it.
//!
//! Coordinates are in the co-moving frame: `xi = x - u t` along travel and
//! `y` across it, both in metres, with the source at the origin. Only
//! conduction is modelled.

mod bessel;
mod sensor;

pub use bessel::{bessel_i0, bessel_k0, bessel_k0e};
pub use sensor::{
    sensor_step, tissue_time_constant, SensorModel, TissueTimeConstantCheck,
    REFERENCE_TISSUE_TAU_S,
};

use crate::error::{domain, Error, Result};
use std::f64::consts::{E, PI};

/// Denaturation threshold in degrees Celsius.
pub const DENATURATION_C: f64 = 60.0;

/// Default ambient temperature in degrees Celsius.
pub const AMBIENT_C: f64 = 20.0;

/// Material and source constants of the thermal model.
///
/// `alpha` is derived from `lambda / (rho * c)` at construction and kept in
/// sync by every `with_*` method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalParams {
    lambda: f64,
    rho: f64,
    c: f64,
    alpha: f64,
    t0: f64,
    tc: f64,
    q_hat: f64,
    d_cut: f64,
    source_q: Option<f64>,
}

fn positive(op: &'static str, name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(domain(op, format!("{name} = {v}, expected finite > 0")))
    }
}

impl ThermalParams {
    /// Conductivity W/(m K), density kg/m^3, specific heat J/(kg K), linear
    /// power density W/m and depth of cut m. Temperatures default to 20 degC
    /// ambient and the 60 degC denaturation isotherm.
    pub fn new(lambda: f64, rho: f64, c: f64, q_hat: f64, d_cut: f64) -> Result<Self> {
        const OP: &str = "ThermalParams::new";
        positive(OP, "lambda", lambda)?;
        positive(OP, "rho", rho)?;
        positive(OP, "c", c)?;
        positive(OP, "q_hat", q_hat)?;
        positive(OP, "d_cut", d_cut)?;
        Ok(Self {
            lambda,
            rho,
            c,
            alpha: lambda / (rho * c),
            t0: AMBIENT_C,
            tc: DENATURATION_C,
            q_hat,
            d_cut,
            source_q: None,
        })
    }

    pub fn with_temperatures(mut self, t0: f64, tc: f64) -> Result<Self> {
        if !(t0.is_finite() && tc.is_finite() && tc > t0) {
            return Err(domain(
                "ThermalParams::with_temperatures",
                format!("t0 = {t0}, tc = {tc}, expected tc > t0"),
            ));
        }
        self.t0 = t0;
        self.tc = tc;
        Ok(self)
    }

    /// Pins the literal source strength `Q` of the field expression. Without
    /// it the field uses `Q = q_hat / u`, so that `Q u` equals the linear
    /// power density feeding the width formula.
    pub fn with_source_q(mut self, q: f64) -> Result<Self> {
        if !(q.is_finite() && q >= 0.0) {
            return Err(domain("ThermalParams::with_source_q", format!("Q = {q}")));
        }
        self.source_q = Some(q);
        Ok(self)
    }

    pub fn with_q_hat(self, q_hat: f64) -> Result<Self> {
        let mut p = Self::new(self.lambda, self.rho, self.c, q_hat, self.d_cut)?;
        p.t0 = self.t0;
        p.tc = self.tc;
        p.source_q = self.source_q;
        Ok(p)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn t0(&self) -> f64 {
        self.t0
    }
    pub fn tc(&self) -> f64 {
        self.tc
    }
    pub fn q_hat(&self) -> f64 {
        self.q_hat
    }
    pub fn d_cut(&self) -> f64 {
        self.d_cut
    }
    pub fn source_q(&self) -> Option<f64> {
        self.source_q
    }

    /// Total source power `q = q_hat * d_cut` in W.
    pub fn q(&self) -> f64 {
        self.q_hat * self.d_cut
    }

    /// Dimensionless isotherm temperature `2 pi lambda d (Tc - T0) / q`.
    pub fn t_star(&self) -> f64 {
        2.0 * PI * self.lambda * self.d_cut * (self.tc - self.t0) / self.q()
    }

    /// Field prefactor `Q u / (2 pi lambda)` in kelvin.
    pub fn amplitude(&self, u: f64) -> f64 {
        let q_u = match self.source_q {
            Some(q) => q * u,
            None => self.q_hat,
        };
        q_u / (2.0 * PI * self.lambda)
    }
}

/// Dimensionless excess temperature `exp(-X) K0(R)` at scaled coordinates
/// `X = u xi / 2 alpha`, `R = u r / 2 alpha`.
pub(crate) fn scaled_excess(x_scaled: f64, r_scaled: f64) -> Result<f64> {
    if r_scaled > 2.0 {
        Ok((-x_scaled - r_scaled).exp() * bessel_k0e(r_scaled)?)
    } else {
        Ok((-x_scaled).exp() * bessel_k0(r_scaled)?)
    }
}

/// Temperature in degC at `(xi, y)` for a source moving at `u` m/s.
pub fn temperature_at(xi: f64, y: f64, u: f64, p: &ThermalParams) -> Result<f64> {
    positive("temperature_at", "u", u)?;
    let r = xi.hypot(y);
    if r == 0.0 {
        return Err(Error::Singularity);
    }
    if !r.is_finite() {
        return Err(domain("temperature_at", format!("xi = {xi}, y = {y}")));
    }
    let k = u / (2.0 * p.alpha);
    Ok(p.t0 + p.amplitude(u) * scaled_excess(k * xi, k * r)?)
}

/// Width correction factor `exp(-1/T) [1 + (1.477 T)^1.407]^0.7107`.
pub fn correction_factor(t_star: f64) -> Result<f64> {
    positive("correction_factor", "t_star", t_star)?;
    Ok((-1.0 / t_star).exp() * (1.0 + (1.477 * t_star).powf(1.407)).powf(0.7107))
}

/// Asymptotic across-track width (m) of the `Tc` isotherm at velocity `u`.
pub fn isotherm_width(u: f64, p: &ThermalParams) -> Result<f64> {
    positive("isotherm_width", "u", u)?;
    let dt = p.tc - p.t0;
    let lead = 1.0 / (2.0 * PI * E).sqrt();
    Ok(lead * p.q() * p.alpha / (u * p.lambda * p.d_cut * dt) * correction_factor(p.t_star())?)
}

/// Distance (m) the `Tc` isotherm reaches ahead of the source on the travel
/// axis. The rightmost point of the hot region sits this far in front of the
/// tool tip.
pub fn isotherm_lead(u: f64, p: &ThermalParams) -> Result<f64> {
    positive("isotherm_lead", "u", u)?;
    let amp = p.amplitude(u);
    let target = (p.tc - p.t0) / amp;
    if !(target.is_finite() && target > 0.0) {
        return Ok(0.0);
    }
    // exp(-X) K0(X) falls monotonically from +inf to 0 on X > 0.
    let g = |x: f64| scaled_excess(x, x).map(|v| v - target);
    let mut lo = 1e-300_f64;
    let mut hi = 1.0_f64;
    while g(hi)? > 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(domain("isotherm_lead", "isotherm does not close"));
        }
    }
    while g(lo)? < 0.0 {
        lo *= 1e-3;
        if lo == 0.0 {
            return Ok(0.0);
        }
    }
    for _ in 0..200 {
        let mid = if hi / lo > 4.0 { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        if g(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi) * 2.0 * p.alpha / u)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tongue(q_hat: f64) -> ThermalParams {
        ThermalParams::new(0.52, 1090.0, 3421.0, q_hat, 0.002).unwrap()
    }

    #[test]
    fn alpha_is_derived() {
        let p = tongue(10.0);
        assert_eq!(p.alpha(), 0.52 / (1090.0 * 3421.0));
        let p = p.with_q_hat(20.0).unwrap();
        assert_eq!(p.alpha(), 0.52 / (1090.0 * 3421.0));
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(ThermalParams::new(0.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(ThermalParams::new(1.0, 1.0, -1.0, 1.0, 1.0).is_err());
        assert!(tongue(1.0).with_temperatures(60.0, 20.0).is_err());
    }

    #[test]
    fn far_field_reaches_ambient() {
        let p = tongue(10.0);
        let u = 0.007;
        let t = temperature_at(0.0, 0.05, u, &p).unwrap();
        assert!((t - p.t0()).abs() < 1e-6, "t = {t}");
    }

    #[test]
    fn symmetric_in_y_and_trailing_side_hotter() {
        let p = tongue(10.0);
        let u = 0.007;
        for (xi, y) in [(1e-5, 3e-5), (-2e-5, 1e-6), (4e-6, -7e-6)] {
            let a = temperature_at(xi, y, u, &p).unwrap();
            let b = temperature_at(xi, -y, u, &p).unwrap();
            assert_eq!(a, b);
        }
        let r = 2e-5;
        assert!(temperature_at(-r, 0.0, u, &p).unwrap() > temperature_at(r, 0.0, u, &p).unwrap());
    }

    #[test]
    fn singular_at_source() {
        assert!(matches!(
            temperature_at(0.0, 0.0, 0.01, &tongue(1.0)),
            Err(Error::Singularity)
        ));
        assert!(temperature_at(1e-3, 0.0, 0.0, &tongue(1.0)).is_err());
    }

    #[test]
    fn zero_source_gives_ambient() {
        let p = tongue(10.0).with_source_q(0.0).unwrap();
        assert_eq!(temperature_at(1e-4, 1e-4, 0.005, &p).unwrap(), p.t0());
    }

    #[test]
    fn correction_factor_values() {
        assert!((correction_factor(1.0).unwrap() - 0.75136).abs() < 1e-4);
        assert!(correction_factor(1e-3).unwrap() < 1e-300);
        let f = correction_factor(100.0).unwrap() / (1.477 * 100.0);
        assert!((0.98..=1.02).contains(&f), "{f}");
        assert!(correction_factor(0.0).is_err());
    }

    #[test]
    fn width_scales_inversely_with_velocity() {
        let p = tongue(95.0);
        let w = isotherm_width(0.004, &p).unwrap();
        for k in [2.0, 3.0, 10.0] {
            let wk = isotherm_width(0.004 * k, &p).unwrap();
            assert!((wk * k / w - 1.0).abs() < 1e-12);
        }
        assert!(isotherm_width(0.0, &p).is_err());
    }

    #[test]
    fn lead_sits_on_the_isotherm() {
        let p = tongue(95.0);
        let u = 0.003;
        let lead = isotherm_lead(u, &p).unwrap();
        assert!(lead > 0.0);
        let t = temperature_at(lead, 0.0, u, &p).unwrap();
        assert!((t - p.tc()).abs() < 1e-9, "t = {t}");
    }
}
