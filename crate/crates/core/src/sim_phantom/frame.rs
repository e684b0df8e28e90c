//! Synthetic radiometric frames of the analytic temperature field.
//!
//! The camera rides with the carriage, so the tool holder sits at a fixed
//! pixel. Columns run along travel (+x to the right), rows across it (+y is
//! up, towards row 0).

use crate::error::{domain, Error, Result};
use crate::thermal_field::{sensor_step, temperature_at, SensorModel, ThermalParams};
use nalgebra::Vector2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::PI;

pub const FRAME_COLS: usize = 384;
pub const FRAME_ROWS: usize = 288;
pub const PX_PER_MM: f64 = 4.81;

/// Pixel holding the camera-frame origin (the tool's neutral position).
pub const ORIGIN_PX: (usize, usize) = (256, 144);

/// Margin below the isotherm excess used to size the rendered window, degC.
const ROI_MARGIN_C: f64 = 5.0;

/// Closed pixel rectangle `[c0, c1] x [r0, r1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelRect {
    pub c0: usize,
    pub c1: usize,
    pub r0: usize,
    pub r1: usize,
}

impl PixelRect {
    pub fn full() -> Self {
        Self {
            c0: 0,
            c1: FRAME_COLS - 1,
            r0: 0,
            r1: FRAME_ROWS - 1,
        }
    }

    pub fn contains(&self, col: usize, row: usize) -> bool {
        (self.c0..=self.c1).contains(&col) && (self.r0..=self.r1).contains(&row)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermalFrame {
    /// Row-major, `FRAME_ROWS` rows of `FRAME_COLS` readings in degC.
    pub pixels: Vec<f64>,
    pub px_per_mm: f64,
    pub timestamp: f64,
    /// When set, every pixel outside the rectangle reads exactly `ambient`.
    pub active: Option<PixelRect>,
    pub ambient: f64,
}

impl ThermalFrame {
    /// Uniform frame at `t0`.
    pub fn uniform(t0: f64, timestamp: f64) -> Self {
        Self {
            pixels: vec![t0; FRAME_COLS * FRAME_ROWS],
            px_per_mm: PX_PER_MM,
            timestamp,
            active: None,
            ambient: t0,
        }
    }

    pub fn cols(&self) -> usize {
        FRAME_COLS
    }

    pub fn rows(&self) -> usize {
        FRAME_ROWS
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.pixels[row * FRAME_COLS + col]
    }

    pub fn set(&mut self, col: usize, row: usize, v: f64) {
        self.pixels[row * FRAME_COLS + col] = v;
    }

    /// Camera-frame position (m) of a pixel centre.
    pub fn pixel_to_m(&self, col: f64, row: f64) -> Vector2<f64> {
        let s = 1e-3 / self.px_per_mm;
        Vector2::new((col - ORIGIN_PX.0 as f64) * s, (ORIGIN_PX.1 as f64 - row) * s)
    }

    /// Fractional pixel coordinates `(col, row)` of a camera-frame position.
    pub fn m_to_pixel(&self, p: Vector2<f64>) -> (f64, f64) {
        let s = self.px_per_mm * 1e3;
        (ORIGIN_PX.0 as f64 + p.x * s, ORIGIN_PX.1 as f64 - p.y * s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.pixels.len() != FRAME_COLS * FRAME_ROWS {
            return Err(domain("ThermalFrame", format!("{} pixels", self.pixels.len())));
        }
        if !(self.px_per_mm > 0.0) {
            return Err(domain("ThermalFrame", format!("px_per_mm = {}", self.px_per_mm)));
        }
        Ok(())
    }
}

/// What the camera sees: the heat source at the tool tip moving through
/// `tissue` at cutting speed `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldState {
    /// Tip position in the camera frame, m.
    pub tip: Vector2<f64>,
    /// Cutting speed, m/s.
    pub u: f64,
    pub tissue: ThermalParams,
    pub timestamp: f64,
}

/// True temperature at a pixel centre. The source itself is nudged a
/// quarter pixel off the singularity.
fn true_temperature(world: &WorldState, frame: &ThermalFrame, col: usize, row: usize) -> Result<f64> {
    if world.u <= 0.0 {
        return Ok(world.tissue.t0());
    }
    let p = frame.pixel_to_m(col as f64, row as f64) - world.tip;
    let r_min = 0.25e-3 / frame.px_per_mm;
    let (xi, y) = if p.norm() < r_min { (p.x, r_min) } else { (p.x, p.y) };
    match temperature_at(xi, y, world.u, &world.tissue) {
        Err(Error::Singularity) => Ok(world.tissue.t0()),
        r => r,
    }
}

fn noise(sensor: &SensorModel, seed: u64) -> Result<(ChaCha8Rng, Option<Normal<f64>>)> {
    let rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = if sensor.noise_sigma > 0.0 {
        Some(Normal::new(0.0, sensor.noise_sigma).map_err(|e| domain("render_frame", e.to_string()))?)
    } else {
        None
    };
    Ok((rng, dist))
}

fn render_rect(
    world: &WorldState,
    prev: &ThermalFrame,
    dt: f64,
    sensor: &SensorModel,
    seed: u64,
    rect: PixelRect,
    active: Option<PixelRect>,
) -> Result<ThermalFrame> {
    sensor.validate()?;
    prev.validate()?;
    let t0 = world.tissue.t0();
    let mut out = ThermalFrame {
        pixels: if active.is_some() { vec![t0; prev.pixels.len()] } else { prev.pixels.clone() },
        px_per_mm: prev.px_per_mm,
        timestamp: world.timestamp,
        active,
        ambient: t0,
    };
    let (mut rng, dist) = noise(sensor, seed)?;
    for row in rect.r0..=rect.r1 {
        for col in rect.c0..=rect.c1 {
            let truth = true_temperature(world, prev, col, row)?;
            let mut v = sensor_step(prev.get(col, row), truth, dt, sensor)?;
            if let Some(d) = &dist {
                v += d.sample(&mut rng);
            }
            out.set(col, row, v);
        }
    }
    Ok(out)
}

/// Renders every pixel: analytic field, first-order lag from `prev`, then
/// Gaussian noise drawn from `seed`.
pub fn render_frame(world: &WorldState, prev: &ThermalFrame, dt: f64, sensor: &SensorModel, seed: u64) -> Result<ThermalFrame> {
    render_rect(world, prev, dt, sensor, seed, PixelRect::full(), None)
}

/// Box `(trail, lead, half_width)` in metres around the source outside of
/// which the excess temperature stays below the isotherm excess minus
/// `margin`.
///
/// With `K0(R) <= sqrt(pi / 2R) exp(-R)` the scaled excess at distance `R`
/// and angle `phi` from the travel direction is at most
/// `A sqrt(pi / 2R) exp(-R (1 + cos phi))`. Writing `S = A sqrt(pi/2) / E`
/// for amplitude `A` and excess `E`: behind the source `R < S^2`; ahead of
/// it `sqrt(pi / 2R) exp(-R) A > E` bounds the lead; and across the wake
/// `y^2 <= 2 R ln(S / sqrt(R)) <= S^2 / e`.
fn roi_box(world: &WorldState, margin: f64) -> (f64, f64, f64) {
    let p = &world.tissue;
    let amp = p.amplitude(world.u);
    let excess = (p.tc() - p.t0() - margin).max(1e-3);
    let s = amp * (PI / 2.0).sqrt() / excess;
    let trail = s * s;
    // sqrt(pi / 2L) exp(-L) A = E, decreasing in L.
    let g = |l: f64| amp * (PI / (2.0 * l)).sqrt() * (-l).exp() - excess;
    let (mut lo, mut hi) = (1e-12, trail.max(1.0));
    for _ in 0..80 {
        let mid = (lo * hi).sqrt();
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lead = hi;
    let half_width = (s / std::f64::consts::E.sqrt()).max(lead);
    let scale = 2.0 * p.alpha() / world.u;
    (trail * scale, lead * scale, half_width * scale)
}

/// Like [`render_frame`], but only the window around the source that can
/// reach within 5 degC of the isotherm is simulated; the rest reads exactly
/// ambient. Used by the trial loop, where only the hot region is measured.
pub fn render_frame_roi(world: &WorldState, prev: &ThermalFrame, dt: f64, sensor: &SensorModel, seed: u64) -> Result<ThermalFrame> {
    if world.u <= 0.0 {
        // No source: nothing can come near the isotherm.
        let (c, r) = ORIGIN_PX;
        let rect = PixelRect { c0: c, c1: c, r0: r, r1: r };
        return render_rect(world, prev, dt, sensor, seed, rect, Some(rect));
    }
    let (trail, lead, half_width) = roi_box(world, ROI_MARGIN_C);
    let px = prev.px_per_mm * 1e3;
    let (cc, rc) = prev.m_to_pixel(world.tip);
    let clamp_c = |v: f64| v.clamp(0.0, (FRAME_COLS - 1) as f64) as usize;
    let clamp_r = |v: f64| v.clamp(0.0, (FRAME_ROWS - 1) as f64) as usize;
    let rect = PixelRect {
        c0: clamp_c((cc - trail * px - 2.0).floor()),
        c1: clamp_c((cc + lead * px + 2.0).ceil()),
        r0: clamp_r((rc - half_width * px - 2.0).floor()),
        r1: clamp_r((rc + half_width * px + 2.0).ceil()),
    };
    render_rect(world, prev, dt, sensor, seed, rect, Some(rect))
}
