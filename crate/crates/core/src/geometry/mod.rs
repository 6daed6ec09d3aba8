//! Parametric domain: material constants, the block/cell cut layout, cut
//! instantiation from the design angles and the rotational perturbation fields.

pub mod boolean;
pub mod vec2;

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use vec2::Point;

pub use boolean::{
    check_near_touch, domain_boundary, union_cut_loops, BoundaryLoop, CutPolygon, Region, SegmentSource,
};

/// Isotropic linear-elastic material (plane strain Lamé form).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    pub young_modulus: f64,
    pub poisson_ratio: f64,
    pub lame_mu: f64,
    pub lame_lambda: f64,
}

impl MaterialParams {
    pub fn new(young_modulus: f64, poisson_ratio: f64) -> Result<Self> {
        let (lame_mu, lame_lambda) = lame_constants(young_modulus, poisson_ratio)?;
        Ok(MaterialParams {
            young_modulus,
            poisson_ratio,
            lame_mu,
            lame_lambda,
        })
    }

    /// E = 50 MPa, ν = 0.48.
    pub fn skin() -> Self {
        Self::new(50.0, 0.48).expect("skin material constants are valid")
    }

    /// σ = 2με + λ tr(ε) I for a symmetric strain given as `[[e11, e12], [e21, e22]]`.
    pub fn stress(&self, strain: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
        let tr = strain[0][0] + strain[1][1];
        let m2 = 2.0 * self.lame_mu;
        [
            [m2 * strain[0][0] + self.lame_lambda * tr, m2 * strain[0][1]],
            [m2 * strain[1][0], m2 * strain[1][1] + self.lame_lambda * tr],
        ]
    }
}

/// Lamé constants `(μ, λ)` from Young's modulus and Poisson's ratio.
pub fn lame_constants(young_modulus: f64, poisson_ratio: f64) -> Result<(f64, f64)> {
    if !(young_modulus > 0.0) || !young_modulus.is_finite() {
        return Err(Error::ParameterOutOfRange {
            name: "young_modulus",
            reason: format!("E = {young_modulus} must be > 0"),
        });
    }
    if !(poisson_ratio > -1.0 && poisson_ratio < 0.5) {
        return Err(Error::ParameterOutOfRange {
            name: "poisson_ratio",
            reason: format!("nu = {poisson_ratio} must lie in (-1, 1/2)"),
        });
    }
    let e = young_modulus;
    let nu = poisson_ratio;
    let mu = e / (2.0 * (1.0 + nu));
    let lambda = nu * e / ((1.0 + nu) * (1.0 - 2.0 * nu));
    Ok((mu, lambda))
}

/// Sides of the square domain, counter-clockwise from the bottom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Bottom, Side::Right, Side::Top, Side::Left];

    pub fn outward_normal(self) -> Point {
        match self {
            Side::Bottom => [0.0, -1.0],
            Side::Right => [1.0, 0.0],
            Side::Top => [0.0, 1.0],
            Side::Left => [-1.0, 0.0],
        }
    }

    /// Image under the reflection `x -> edge - x`.
    pub fn mirror_x(self) -> Side {
        match self {
            Side::Right => Side::Left,
            Side::Left => Side::Right,
            s => s,
        }
    }

    /// Image under the reflection `y -> edge - y`.
    pub fn mirror_y(self) -> Side {
        match self {
            Side::Top => Side::Bottom,
            Side::Bottom => Side::Top,
            s => s,
        }
    }
}

/// Which square sides carry the prescribed displacement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StressScenario {
    /// Stretch along y: bottom and top clamped, left and right free.
    Uniaxial,
    /// All four sides clamped.
    Biaxial,
}

impl StressScenario {
    pub fn is_dirichlet(self, side: Side) -> bool {
        match self {
            StressScenario::Biaxial => true,
            StressScenario::Uniaxial => matches!(side, Side::Bottom | Side::Top),
        }
    }

    /// Unit vector of the stretch direction (uniaxial) used to judge patterns.
    pub fn stretch_direction(self) -> Option<Point> {
        match self {
            StressScenario::Uniaxial => Some([0.0, 1.0]),
            StressScenario::Biaxial => None,
        }
    }
}

/// Named cut proportions. Semi-axes scale with the cell edge so that a
/// layout with fewer cells keeps the same cut-to-cell ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayoutPreset {
    /// a = 0.75 cell, b = 0.05 cell. Adjacent cuts may overlap.
    Standard,
    /// a = 0.45 cell, b = 0.05 cell. Cuts and their cutoff balls never overlap.
    Verification,
}

impl LayoutPreset {
    pub fn semi_axes_per_cell(self) -> (f64, f64) {
        match self {
            LayoutPreset::Standard => (0.75, 0.05),
            LayoutPreset::Verification => (0.45, 0.05),
        }
    }
}

/// Block/cell grid over the square `[0, domain_edge]^2` and the cut ellipse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayoutSpec {
    pub domain_edge: f64,
    pub blocks: [usize; 2],
    pub cells_per_block: [usize; 2],
    pub cell_edge: f64,
    pub semi_major: f64,
    pub semi_minor: f64,
}

impl Default for LayoutSpec {
    fn default() -> Self {
        LayoutSpec::standard()
    }
}

impl LayoutSpec {
    /// 3x3 blocks of 4x4 cells with edge 1/12 on the unit square, a = 0.75/12, b = 0.05/12.
    pub fn standard() -> Self {
        Self::from_preset(LayoutPreset::Standard, [3, 3], [4, 4])
    }

    /// Standard grid with a = 0.45/12.
    pub fn verification() -> Self {
        Self::from_preset(LayoutPreset::Verification, [3, 3], [4, 4])
    }

    /// Unit square split into `blocks x cells_per_block` square cells with
    /// the preset's cut proportions.
    pub fn from_preset(preset: LayoutPreset, blocks: [usize; 2], cells_per_block: [usize; 2]) -> Self {
        let domain_edge = 1.0;
        let cell_edge = domain_edge / (blocks[0] * cells_per_block[0]) as f64;
        let (ra, rb) = preset.semi_axes_per_cell();
        LayoutSpec {
            domain_edge,
            blocks,
            cells_per_block,
            cell_edge,
            semi_major: ra * cell_edge,
            semi_minor: rb * cell_edge,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let errs = self.violations();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }

    /// Every violated invariant, one message each.
    pub fn violations(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(self.domain_edge > 0.0) {
            errs.push(format!("layout.domain_edge = {} must be > 0", self.domain_edge));
        }
        for k in 0..2 {
            if self.blocks[k] == 0 || self.cells_per_block[k] == 0 {
                errs.push("layout.blocks and layout.cells_per_block must be >= 1".to_string());
                break;
            }
            let span = (self.blocks[k] * self.cells_per_block[k]) as f64 * self.cell_edge;
            if (span - self.domain_edge).abs() > 1e-9 * self.domain_edge {
                errs.push(format!(
                    "layout: blocks * cells_per_block * cell_edge = {span} along axis {k} must equal domain_edge = {}",
                    self.domain_edge
                ));
            }
        }
        if !(self.semi_minor > 0.0 && self.semi_minor < self.semi_major && self.semi_major < self.cell_edge) {
            errs.push(format!(
                "layout: need 0 < semi_minor ({}) < semi_major ({}) < cell_edge ({})",
                self.semi_minor, self.semi_major, self.cell_edge
            ));
        }
        errs
    }

    /// Number of design angles N (cells per block).
    pub fn design_len(&self) -> usize {
        self.cells_per_block[0] * self.cells_per_block[1]
    }

    pub fn block_count(&self) -> usize {
        self.blocks[0] * self.blocks[1]
    }

    pub fn cut_count(&self) -> usize {
        self.block_count() * self.design_len()
    }

    /// Cells along each axis of the whole grid.
    pub fn grid_cells(&self) -> [usize; 2] {
        [
            self.blocks[0] * self.cells_per_block[0],
            self.blocks[1] * self.cells_per_block[1],
        ]
    }

    /// Instance number of the cut in grid cell `(gx, gy)`, matching the
    /// order of [`instantiate_cuts`].
    pub fn instance_at(&self, gx: usize, gy: usize) -> usize {
        let [cx, cy] = self.cells_per_block;
        let (ib, ic) = (gx / cx, gx % cx);
        let (jb, jc) = (gy / cy, gy % cy);
        ((jb * self.blocks[0] + ib) * cy + jc) * cx + ic
    }

    /// Grid cell `(gx, gy)` of an instance number.
    pub fn grid_position(&self, instance: usize) -> (usize, usize) {
        let [cx, cy] = self.cells_per_block;
        let ic = instance % cx;
        let jc = (instance / cx) % cy;
        let block = instance / (cx * cy);
        let (ib, jb) = (block % self.blocks[0], block / self.blocks[0]);
        (ib * cx + ic, jb * cy + jc)
    }

    /// True when the cuts and their cutoff balls are pairwise disjoint for every design.
    pub fn cuts_always_disjoint(&self) -> bool {
        2.0 * self.semi_major < self.cell_edge
    }

    /// Tip radius of curvature b^2 / a.
    pub fn tip_radius(&self) -> f64 {
        self.semi_minor * self.semi_minor / self.semi_major
    }
}

/// The N cut angles, reduced to `[0, 2π)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DesignVector(Vec<f64>);

impl DesignVector {
    pub fn new(angles: impl Into<Vec<f64>>) -> Self {
        let mut v: Vec<f64> = angles.into();
        for a in &mut v {
            *a = reduce_angle(*a);
        }
        DesignVector(v)
    }

    pub fn zeros(n: usize) -> Self {
        DesignVector(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn angles(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// `self - step * direction`, re-reduced.
    pub fn stepped(&self, direction: &[f64], step: f64) -> Self {
        DesignVector::new(
            self.0
                .iter()
                .zip(direction)
                .map(|(a, d)| a - step * d)
                .collect::<Vec<_>>(),
        )
    }

    /// Largest entrywise distance on the circle (period 2π).
    pub fn max_angular_distance(&self, other: &DesignVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| circular_distance(*a, *b, TAU))
            .fold(0.0, f64::max)
    }

    /// True when both designs produce the same cut layout (angles agree mod π).
    pub fn layout_equivalent(&self, other: &DesignVector, tol: f64) -> bool {
        self.len() == other.len()
            && self
                .0
                .iter()
                .zip(&other.0)
                .all(|(a, b)| circular_distance(*a, *b, PI) <= tol)
    }
}

/// Reduce an angle to `[0, 2π)`.
pub fn reduce_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Distance between two angles on a circle of the given period.
pub fn circular_distance(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

/// One elliptical cut of the full grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutInstance {
    pub center: Point,
    pub angle: f64,
    pub design_index: usize,
}

impl CutInstance {
    /// Unit vector along the major axis.
    pub fn axis(&self) -> Point {
        [self.angle.cos(), self.angle.sin()]
    }

    /// The two tips of the major axis.
    pub fn tips(&self, layout: &LayoutSpec) -> [Point; 2] {
        let d = vec2::scale(self.axis(), layout.semi_major);
        [vec2::add(self.center, d), vec2::sub(self.center, d)]
    }
}

/// One cut per grid cell; design entry `k` drives every instance whose
/// cell has in-block index `k`.
pub fn instantiate_cuts(layout: &LayoutSpec, design: &DesignVector) -> Result<Vec<CutInstance>> {
    let n = layout.design_len();
    if design.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: design.len(),
        });
    }
    let [bx, by] = layout.blocks;
    let [cx, cy] = layout.cells_per_block;
    let h = layout.cell_edge;
    let mut cuts = Vec::with_capacity(layout.cut_count());
    for jb in 0..by {
        for ib in 0..bx {
            for jc in 0..cy {
                for ic in 0..cx {
                    let design_index = jc * cx + ic;
                    let gx = ib * cx + ic;
                    let gy = jb * cy + jc;
                    cuts.push(CutInstance {
                        center: [(gx as f64 + 0.5) * h, (gy as f64 + 0.5) * h],
                        angle: design.angles()[design_index],
                        design_index,
                    });
                }
            }
        }
    }
    Ok(cuts)
}

/// Counter-clockwise polygon with `m` vertices inscribed in the cut ellipse.
///
/// Vertices sit at the Chebyshev parameters `t_k = (k + 1/2) 2π/m`, which
/// crowds them at the two tips. The geometric angle is reduced mod π first,
/// so `α` and `α + π` give bit-identical polygons.
pub fn cut_boundary_polyline(cut: &CutInstance, layout: &LayoutSpec, m: usize) -> Result<Vec<Point>> {
    if m < 16 {
        return Err(Error::ParameterOutOfRange {
            name: "m",
            reason: format!("polyline needs at least 16 vertices, got {m}"),
        });
    }
    let angle = cut.angle.rem_euclid(PI);
    let (s, c) = angle.sin_cos();
    let (a, b) = (layout.semi_major, layout.semi_minor);
    let step = TAU / m as f64;
    Ok((0..m)
        .map(|k| {
            let t = (k as f64 + 0.5) * step;
            let (st, ct) = t.sin_cos();
            let (x, y) = (a * ct, b * st);
            [cut.center[0] + c * x - s * y, cut.center[1] + s * x + c * y]
        })
        .collect())
}

/// Inner and outer radius of the smooth cutoff χ around one cut.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffSpec {
    pub center: Point,
    pub inner_radius: f64,
    pub outer_radius: f64,
}

impl CutoffSpec {
    /// r = 1.05 a; R = min(1.45 a, distance to the square, half the cell
    /// edge). Fails when no such annulus exists (overlapping presets).
    pub fn for_cut(layout: &LayoutSpec, cut: &CutInstance, instance: usize) -> Result<Self> {
        let a = layout.semi_major;
        let inner = 1.05 * a;
        let e = layout.domain_edge;
        let c = cut.center;
        let to_boundary = c[0].min(c[1]).min(e - c[0]).min(e - c[1]);
        let outer = (1.45 * a).min(to_boundary).min(0.5 * layout.cell_edge);
        if inner >= outer {
            return Err(Error::NoCutoff {
                instance,
                inner,
                outer,
            });
        }
        Ok(CutoffSpec {
            center: c,
            inner_radius: inner,
            outer_radius: outer,
        })
    }

    /// χ(x): 1 inside the inner ball, 0 outside the outer ball, quintic
    /// smoothstep (C²) in between.
    pub fn value(&self, x: Point) -> f64 {
        let r = vec2::dist(x, self.center);
        let s = (r - self.inner_radius) / (self.outer_radius - self.inner_radius);
        if s <= 0.0 {
            1.0
        } else if s >= 1.0 {
            0.0
        } else {
            1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
        }
    }
}

/// θ_i(x) = χ_i(x) R90 (x - c_i): the linearized rotation of cut `i` about its center.
pub fn rotation_field(cutoff: &CutoffSpec, x: Point) -> Point {
    let chi = cutoff.value(x);
    if chi == 0.0 {
        return [0.0, 0.0];
    }
    vec2::scale(vec2::perp(vec2::sub(x, cutoff.center)), chi)
}

/// Rotation generator about `center` without cutoff, valid on the cut's own boundary.
pub fn rotation_generator(center: Point, x: Point) -> Point {
    vec2::perp(vec2::sub(x, center))
}
