//! Target element size graded toward the cut tips and flanks.

use crate::geometry::vec2::{self, Point};
use crate::geometry::{CutInstance, LayoutSpec};

#[derive(Debug, Clone, Copy)]
struct CutFrame {
    center: Point,
    axis: Point,
}

/// h(x) = min(target_h, tip_h + G d_tip, h_flank + G max(0, d_axis - b)),
/// with `h_flank = sqrt(tip_h * target_h)`.
#[derive(Debug, Clone)]
pub struct SizeField {
    pub target_h: f64,
    pub tip_h: f64,
    pub flank_h: f64,
    pub grading: f64,
    semi_major: f64,
    semi_minor: f64,
    reach: f64,
    cuts: Vec<CutFrame>,
}

impl SizeField {
    pub fn new(layout: &LayoutSpec, cuts: &[CutInstance], target_h: f64, tip_h: f64, grading: f64) -> Self {
        let flank_h = (tip_h * target_h).sqrt();
        SizeField {
            target_h,
            tip_h,
            flank_h,
            grading,
            semi_major: layout.semi_major,
            semi_minor: layout.semi_minor,
            reach: layout.semi_major + (target_h - tip_h).max(0.0) / grading,
            cuts: cuts
                .iter()
                .map(|c| CutFrame {
                    center: c.center,
                    axis: [c.angle.cos(), c.angle.sin()],
                })
                .collect(),
        }
    }

    /// Uniform size, no cuts.
    pub fn uniform(h: f64) -> Self {
        SizeField {
            target_h: h,
            tip_h: h,
            flank_h: h,
            grading: 1.0,
            semi_major: 0.0,
            semi_minor: 0.0,
            reach: 0.0,
            cuts: Vec::new(),
        }
    }

    pub fn at(&self, x: Point) -> f64 {
        let mut h = self.target_h;
        let (a, b, g) = (self.semi_major, self.semi_minor, self.grading);
        for c in &self.cuts {
            let d = vec2::sub(x, c.center);
            if d[0].abs() > self.reach || d[1].abs() > self.reach {
                continue;
            }
            let along = vec2::dot(d, c.axis);
            let across = vec2::cross(c.axis, d).abs();
            let d_axis = if along.abs() <= a {
                across
            } else {
                (across * across + (along.abs() - a).powi(2)).sqrt()
            };
            let d_tip = (across * across + (along.abs() - a).powi(2)).sqrt();
            h = h
                .min(self.tip_h + g * d_tip)
                .min(self.flank_h + g * (d_axis - b).max(0.0));
        }
        h
    }

    /// Smallest size anywhere.
    pub fn min_size(&self) -> f64 {
        if self.cuts.is_empty() {
            self.target_h
        } else {
            self.tip_h.min(self.target_h)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{instantiate_cuts, DesignVector, LayoutPreset};

    #[test]
    fn grades_from_tip_to_target() {
        let layout = LayoutSpec::from_preset(LayoutPreset::Verification, [1, 1], [1, 1]);
        let cuts = instantiate_cuts(&layout, &DesignVector::zeros(1)).unwrap();
        let f = SizeField::new(&layout, &cuts, 0.05, 0.002, 0.3);
        let tip = [0.5 + layout.semi_major, 0.5];
        assert!((f.at(tip) - 0.002).abs() < 1e-15);
        assert_eq!(f.at([0.02, 0.02]), 0.05);
        let flank = [0.5, 0.5 + layout.semi_minor];
        assert!((f.at(flank) - f.flank_h).abs() < 1e-15);
        let mut last = 0.0;
        for k in 0..50 {
            let h = f.at([tip[0] + 0.005 * k as f64, 0.5]);
            assert!(h >= last);
            last = h;
        }
    }
}
