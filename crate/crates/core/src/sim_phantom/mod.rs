//! Simulated stepped phantom: per-segment tissue and force parameters, a
//! synthetic thermal camera, and the image measurements taken from it.

mod frame;
mod pgm;
mod vision;

pub use frame::{render_frame, render_frame_roi, PixelRect, ThermalFrame, WorldState, FRAME_COLS, FRAME_ROWS, PX_PER_MM};
pub use pgm::{read_pgm, write_pgm};
pub use vision::{boundary_points, convex_hull, estimate_tip, hot_mask, measure_frame, measure_width, Mask};

use crate::error::{domain, Error, Result};
use crate::thermal_field::ThermalParams;

/// Phantom length, m.
pub const PHANTOM_LENGTH: f64 = 0.25;
/// Length of each of the five segments, m.
pub const SEGMENT_LENGTH: f64 = 0.05;
/// Second and fourth segments are raised.
pub const RAISED_SEGMENTS: [usize; 2] = [1, 3];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentParams {
    pub tissue: ThermalParams,
    /// Multiplier on the tool's `d_max` inside this segment, >= 1.
    pub tool_override: f64,
}

impl SegmentParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tool_override.is_finite() && self.tool_override >= 1.0) {
            return Err(domain("SegmentParams", format!("tool_override = {}", self.tool_override)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomProfile {
    pub length: f64,
    pub segment_length: f64,
    pub segments: Vec<SegmentParams>,
    pub raised_indices: Vec<usize>,
    /// Height of the raised segments, m (0 for a flat phantom).
    pub step_height: f64,
    /// Distance over which parameters blend into a new segment, m.
    pub transition: f64,
}

impl PhantomProfile {
    /// Uniform phantom.
    pub fn flat(tissue: ThermalParams) -> Self {
        let seg = SegmentParams { tissue, tool_override: 1.0 };
        Self {
            length: PHANTOM_LENGTH,
            segment_length: SEGMENT_LENGTH,
            segments: vec![seg; 5],
            raised_indices: Vec::new(),
            step_height: 0.0,
            transition: 0.0,
        }
    }

    /// Second and fourth segments raised by `step_height`, carrying
    /// `force_multiplier` on `d_max` and `q_scale` on the linear power
    /// density.
    pub fn stepped(base: ThermalParams, step_height: f64, force_multiplier: f64, q_scale: f64, transition: f64) -> Result<Self> {
        if !(step_height >= 0.0 && q_scale > 0.0 && transition >= 0.0 && transition < SEGMENT_LENGTH) {
            return Err(domain(
                "PhantomProfile::stepped",
                format!("step = {step_height}, q_scale = {q_scale}, transition = {transition}"),
            ));
        }
        let mut p = Self::flat(base);
        let raised = SegmentParams {
            tissue: base.with_q_hat(base.q_hat() * q_scale)?,
            tool_override: force_multiplier,
        };
        raised.validate()?;
        for &i in &RAISED_SEGMENTS {
            p.segments[i] = raised;
        }
        p.raised_indices = RAISED_SEGMENTS.to_vec();
        p.step_height = step_height;
        p.transition = transition;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.segments.len() as f64;
        if !(self.segment_length > 0.0 && (n * self.segment_length - self.length).abs() <= 1e-12 * self.length) {
            return Err(domain("PhantomProfile", "segments do not tile the phantom length"));
        }
        for s in &self.segments {
            s.validate()?;
        }
        if self.raised_indices.iter().any(|&i| i >= self.segments.len()) {
            return Err(domain("PhantomProfile", "raised index out of range"));
        }
        if !(self.transition >= 0.0 && self.transition < self.segment_length) {
            return Err(domain("PhantomProfile", format!("transition = {}", self.transition)));
        }
        Ok(())
    }

    fn index_at(&self, x: f64) -> Result<usize> {
        if !(x >= 0.0 && x <= self.length) {
            return Err(Error::OutOfRange { x, length: self.length });
        }
        // The tolerance keeps boundaries like 0.15 / 0.05 on the right side.
        let i = (x / self.segment_length + 1e-9).floor() as usize;
        Ok(i.min(self.segments.len() - 1))
    }

    /// Segment containing `x`; boundaries belong to the segment on their
    /// right, and `x == length` to the last segment.
    pub fn params_at(&self, x: f64) -> Result<&SegmentParams> {
        Ok(&self.segments[self.index_at(x)?])
    }

    pub fn is_raised_at(&self, x: f64) -> Result<bool> {
        Ok(self.raised_indices.contains(&self.index_at(x)?))
    }

    /// Start positions of the raised segments, m.
    pub fn step_starts(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.raised_indices.iter().map(|&i| i as f64 * self.segment_length).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Blend weight of the segment containing `x` against its predecessor.
    fn blend(&self, x: f64) -> Result<(usize, f64)> {
        let i = self.index_at(x)?;
        if i == 0 || self.transition == 0.0 {
            return Ok((i, 1.0));
        }
        let into = x - i as f64 * self.segment_length;
        Ok((i, (into / self.transition).clamp(0.0, 1.0)))
    }

    /// `d_max` multiplier at `x`, ramped linearly over `transition` after
    /// each boundary.
    pub fn force_multiplier_at(&self, x: f64) -> Result<f64> {
        let (i, s) = self.blend(x)?;
        let cur = self.segments[i].tool_override;
        if s >= 1.0 {
            return Ok(cur);
        }
        let prev = self.segments[i - 1].tool_override;
        Ok(prev + s * (cur - prev))
    }

    /// Tissue at `x` with the linear power density ramped like the force.
    pub fn tissue_at(&self, x: f64) -> Result<ThermalParams> {
        let (i, s) = self.blend(x)?;
        let cur = self.segments[i].tissue;
        if s >= 1.0 {
            return Ok(cur);
        }
        let prev = self.segments[i - 1].tissue;
        if prev == cur {
            return Ok(cur);
        }
        cur.with_q_hat(prev.q_hat() + s * (cur.q_hat() - prev.q_hat()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ThermalParams {
        ThermalParams::new(38.6, 1090.0, 3421.0, 7030.0, 0.002).unwrap()
    }

    #[test]
    fn segment_lookup() {
        let p = PhantomProfile::stepped(base(), 0.003, 8.0, 1.1, 0.0).unwrap();
        assert!(!p.is_raised_at(0.01).unwrap());
        assert!(p.is_raised_at(0.06).unwrap());
        assert!(p.is_raised_at(0.05).unwrap());
        assert!(!p.is_raised_at(0.10).unwrap());
        assert_eq!(p.params_at(0.25).unwrap().tool_override, 1.0);
        assert!(matches!(p.params_at(0.2501), Err(Error::OutOfRange { .. })));
        assert!(p.params_at(-1e-9).is_err());
        assert!(p.is_raised_at(0.15).unwrap());
        let starts = p.step_starts();
        assert!((starts[0] - 0.05).abs() < 1e-15 && (starts[1] - 0.15).abs() < 1e-15);
    }

    #[test]
    fn ramp_is_linear() {
        let p = PhantomProfile::stepped(base(), 0.002, 5.0, 1.0, 0.01).unwrap();
        assert_eq!(p.force_multiplier_at(0.05).unwrap(), 1.0);
        assert!((p.force_multiplier_at(0.055).unwrap() - 3.0).abs() < 1e-9);
        assert_eq!(p.force_multiplier_at(0.07).unwrap(), 5.0);
        assert!((p.force_multiplier_at(0.105).unwrap() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn flat_is_valid() {
        let p = PhantomProfile::flat(base());
        p.validate().unwrap();
        assert!(p.step_starts().is_empty());
        assert!(PhantomProfile::stepped(base(), 0.002, 0.5, 1.0, 0.0).is_err());
    }
}
