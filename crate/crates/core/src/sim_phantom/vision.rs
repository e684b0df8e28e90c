//! Image measurements: threshold, boundary points, one convex hull over all
//! hot regions, then width across travel and the leading tip vertex.

use super::frame::{PixelRect, ThermalFrame};
use crate::error::{Error, Result};
use nalgebra::Vector2;

/// Binary mask over a window of a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    pub rect: PixelRect,
    bits: Vec<bool>,
}

impl Mask {
    fn width(&self) -> usize {
        self.rect.c1 - self.rect.c0 + 1
    }

    pub fn get(&self, col: usize, row: usize) -> bool {
        self.rect.contains(col, row) && self.bits[(row - self.rect.r0) * self.width() + (col - self.rect.c0)]
    }

    /// `(col, row)` of every set pixel, row-major.
    pub fn points(&self) -> Vec<(i64, i64)> {
        let mut v = Vec::new();
        for row in self.rect.r0..=self.rect.r1 {
            for col in self.rect.c0..=self.rect.c1 {
                if self.get(col, row) {
                    v.push((col as i64, row as i64));
                }
            }
        }
        v
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }
}

/// Pixels strictly above `threshold`. Only the frame's active window is
/// scanned when the rest is known to sit at a sub-threshold ambient.
pub fn hot_mask(frame: &ThermalFrame, threshold: f64) -> Mask {
    let rect = match frame.active {
        Some(r) if frame.ambient <= threshold => r,
        _ => PixelRect::full(),
    };
    let mut bits = Vec::with_capacity((rect.c1 - rect.c0 + 1) * (rect.r1 - rect.r0 + 1));
    for row in rect.r0..=rect.r1 {
        for col in rect.c0..=rect.c1 {
            bits.push(frame.get(col, row) > threshold);
        }
    }
    Mask { rect, bits }
}

/// Set pixels with at least one 4-neighbour unset or outside the frame.
pub fn boundary_points(mask: &Mask) -> Vec<(i64, i64)> {
    let r = mask.rect;
    let mut out = Vec::new();
    for row in r.r0..=r.r1 {
        for col in r.c0..=r.c1 {
            if !mask.get(col, row) {
                continue;
            }
            let edge = col == 0
                || row == 0
                || !mask.get(col - 1, row)
                || !mask.get(col + 1, row)
                || !mask.get(col, row - 1)
                || !mask.get(col, row + 1);
            if edge {
                out.push((col as i64, row as i64));
            }
        }
    }
    out
}

fn cross(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Andrew's monotone chain. Returns hull vertices counter-clockwise (in
/// `(col, row)` axes) without collinear points; degenerate inputs return
/// their distinct extreme points.
pub fn convex_hull(points: &[(i64, i64)]) -> Vec<(i64, i64)> {
    let mut pts = points.to_vec();
    pts.sort_unstable();
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<(i64, i64)> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

fn hull_of(frame: &ThermalFrame, threshold: f64) -> Vec<(i64, i64)> {
    convex_hull(&boundary_points(&hot_mask(frame, threshold)))
}

fn hull_width(frame: &ThermalFrame, hull: &[(i64, i64)]) -> f64 {
    let (Some(lo), Some(hi)) = (hull.iter().map(|p| p.1).min(), hull.iter().map(|p| p.1).max()) else {
        return 0.0;
    };
    (hi - lo + 1) as f64 / frame.px_per_mm * 1e-3
}

fn hull_tip(frame: &ThermalFrame, hull: &[(i64, i64)]) -> Option<Vector2<f64>> {
    let axis_row = frame.m_to_pixel(Vector2::zeros()).1;
    let best = hull.iter().copied().max_by(|a, b| {
        a.0.cmp(&b.0)
            .then_with(|| (b.1 as f64 - axis_row).abs().total_cmp(&(a.1 as f64 - axis_row).abs()))
    });
    best.map(|(c, r)| frame.pixel_to_m(c as f64, r as f64))
}

/// Across-travel extent (m) of the hull of all pixels above `threshold`,
/// counting whole pixels; 0 when nothing is hot.
pub fn measure_width(frame: &ThermalFrame, threshold: f64) -> f64 {
    hull_width(frame, &hull_of(frame, threshold))
}

/// Camera-frame position (m) of the rightmost hull vertex; ties go to the
/// vertex nearest the travel axis.
pub fn estimate_tip(frame: &ThermalFrame, threshold: f64) -> Result<Vector2<f64>> {
    hull_tip(frame, &hull_of(frame, threshold)).ok_or(Error::NoDetection { threshold })
}

/// [`measure_width`] and [`estimate_tip`] from a single hull.
pub fn measure_frame(frame: &ThermalFrame, threshold: f64) -> (f64, Option<Vector2<f64>>) {
    let hull = hull_of(frame, threshold);
    (hull_width(frame, &hull), hull_tip(frame, &hull))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn patch(c0: usize, c1: usize, r0: usize, r1: usize) -> ThermalFrame {
        let mut f = ThermalFrame::uniform(20.0, 0.0);
        for r in r0..=r1 {
            for c in c0..=c1 {
                f.set(c, r, 80.0);
            }
        }
        f
    }

    #[test]
    fn empty_frame_has_zero_width() {
        let f = ThermalFrame::uniform(20.0, 0.0);
        assert_eq!(measure_width(&f, 60.0), 0.0);
        assert!(matches!(estimate_tip(&f, 60.0), Err(Error::NoDetection { .. })));
    }

    #[test]
    fn rectangle_width_counts_pixels() {
        let f = patch(100, 140, 50, 69);
        let w = measure_width(&f, 60.0);
        assert!((w - 20.0 / 4.81 * 1e-3).abs() < 1e-15);
    }

    #[test]
    fn single_pixel_tip() {
        let f = patch(100, 100, 50, 50);
        let tip = estimate_tip(&f, 60.0).unwrap();
        assert_eq!(tip, f.pixel_to_m(100.0, 50.0));
    }

    #[test]
    fn hull_drops_interior_and_collinear_points() {
        let pts: Vec<(i64, i64)> = (0..5).flat_map(|x| (0..5).map(move |y| (x, y))).collect();
        let mut h = convex_hull(&pts);
        h.sort();
        assert_eq!(h, vec![(0, 0), (0, 4), (4, 0), (4, 4)]);
        assert_eq!(convex_hull(&[(1, 1), (1, 1)]), vec![(1, 1)]);
    }

    #[test]
    fn border_pixels_are_boundary() {
        let f = patch(0, 2, 0, 2);
        let m = hot_mask(&f, 60.0);
        let b = boundary_points(&m);
        assert_eq!(b.len(), 8);
    }
}
