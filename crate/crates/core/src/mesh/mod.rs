//! Conforming triangulation of the cut domain with boundary provenance.
//!
//! The domain boundary is extracted as polygons, subdivided to the local
//! size, seeded with a graded quadtree and handed to a constrained Delaunay
//! refiner. When the cut pattern is mirror-symmetric in both axes the mesher
//! can triangulate one quarter and reflect it, which makes the mesh (and
//! every discrete field computed on it) exactly symmetric.

mod build;
pub mod sizing;

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::vec2::{self, Point};
use crate::geometry::{CutInstance, CutPolygon, SegmentSource, Side, StressScenario};

pub use build::{
    build_geometry, generate, is_mirror_symmetric, polyline_vertex_count, structured_square, DomainGeometry,
};
pub use sizing::SizeField;

/// Whether to exploit mirror symmetry of the cut pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SymmetryMode {
    /// Always mesh the full square.
    #[default]
    Off,
    /// Mesh a quarter and reflect whenever the pattern allows it.
    Prefer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshParams {
    /// Element size away from the cuts.
    pub target_h: f64,
    /// Element size at the cut tips; `None` means half the semi-minor axis.
    pub tip_h: Option<f64>,
    /// Growth rate of the size away from the cuts.
    pub grading: f64,
    /// Vertices per cut polygon; `None` derives it from the tip and flank sizes.
    pub polyline_vertices: Option<usize>,
    /// Refinement angle target in degrees.
    pub min_angle_deg: f64,
    pub symmetry: SymmetryMode,
}

impl Default for MeshParams {
    fn default() -> Self {
        MeshParams {
            target_h: 0.02,
            tip_h: None,
            grading: 0.3,
            polyline_vertices: None,
            min_angle_deg: 25.0,
            symmetry: SymmetryMode::Off,
        }
    }
}

impl MeshParams {
    pub fn with_target_h(target_h: f64) -> Self {
        MeshParams {
            target_h,
            ..Default::default()
        }
    }

    pub fn resolved_tip_h(&self, semi_minor: f64) -> f64 {
        self.tip_h.unwrap_or(0.5 * semi_minor).min(self.target_h)
    }

    pub fn violations(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(self.target_h > 0.0 && self.target_h <= 0.5) {
            errs.push(format!("mesh.target_h = {} must lie in (0, 0.5]", self.target_h));
        }
        if let Some(t) = self.tip_h {
            if !(t > 0.0) {
                errs.push(format!("mesh.tip_h = {t} must be > 0"));
            }
        }
        if !(self.grading > 0.0 && self.grading <= 2.0) {
            errs.push(format!("mesh.grading = {} must lie in (0, 2]", self.grading));
        }
        if let Some(m) = self.polyline_vertices {
            if m < 16 || m % 4 != 0 {
                errs.push(format!("mesh.polyline_vertices = {m} must be a multiple of 4 and >= 16"));
            }
        }
        if !(self.min_angle_deg >= 5.0 && self.min_angle_deg <= 33.0) {
            errs.push(format!("mesh.min_angle_deg = {} must lie in [5, 33]", self.min_angle_deg));
        }
        errs
    }
}

/// Boundary edge oriented with the material on its left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub v: [usize; 2],
    pub source: SegmentSource,
}

/// Straight-sided triangulation. Triangles are counter-clockwise.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary: Vec<BoundaryEdge>,
    /// Cut instances the mesh was built for (empty for a plain square).
    pub cuts: Vec<CutInstance>,
    /// Whether the mesh was produced by reflecting a quarter.
    pub mirrored: bool,
}

impl Mesh {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        0.5 * vec2::orient(a, b, c)
    }

    /// Lower-left and upper-right corners of the vertex bounding box.
    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &self.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }

    pub fn area(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.boundary[e].v;
        vec2::dist(self.vertices[a], self.vertices[b])
    }

    /// Unit outward normal of boundary edge `e` (pointing away from the material).
    pub fn boundary_normal(&self, e: usize) -> Point {
        let [a, b] = self.boundary[e].v;
        let t = vec2::sub(self.vertices[b], self.vertices[a]);
        let l = vec2::norm(t);
        [t[1] / l, -t[0] / l]
    }

    /// Smallest interior angle over all triangles, in degrees.
    pub fn min_angle_deg(&self) -> f64 {
        (0..self.num_triangles())
            .map(|t| min_angle(&self.triangle_points(t)))
            .fold(f64::INFINITY, f64::min)
            .to_degrees()
    }

    /// Longest triangle edge.
    pub fn max_edge(&self) -> f64 {
        (0..self.num_triangles())
            .flat_map(|t| {
                let p = self.triangle_points(t);
                [vec2::dist(p[0], p[1]), vec2::dist(p[1], p[2]), vec2::dist(p[2], p[0])]
            })
            .fold(0.0, f64::max)
    }

    /// Indices of boundary edges that belong to the given cut instance.
    pub fn cut_edges(&self, instance: usize) -> impl Iterator<Item = usize> + '_ {
        self.boundary
            .iter()
            .enumerate()
            .filter(move |(_, e)| e.source.cut_instance() == Some(instance))
            .map(|(i, _)| i)
    }

    /// Vertices lying on a square side that carries prescribed displacement.
    pub fn dirichlet_vertices(&self, scenario: StressScenario) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .boundary
            .iter()
            .filter(|e| matches!(e.source, SegmentSource::Side(s) if scenario.is_dirichlet(s)))
            .flat_map(|e| e.v)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Square sides each vertex lies on (at most two for a corner).
    pub fn vertex_sides(&self) -> HashMap<usize, Vec<Side>> {
        let mut map: HashMap<usize, Vec<Side>> = HashMap::new();
        for e in &self.boundary {
            if let SegmentSource::Side(s) = e.source {
                for v in e.v {
                    let entry = map.entry(v).or_default();
                    if !entry.contains(&s) {
                        entry.push(s);
                    }
                }
            }
        }
        map
    }

    /// Connected components of the triangle graph (sharing an edge), as
    /// per-triangle component labels and the component count.
    pub fn components(&self) -> (Vec<usize>, usize) {
        let mut edge_owner: HashMap<(usize, usize), usize> = HashMap::new();
        let mut parent: Vec<usize> = (0..self.num_triangles()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                if let Some(&o) = edge_owner.get(&key) {
                    let (ra, rb) = (find(&mut parent, o), find(&mut parent, t));
                    if ra != rb {
                        parent[ra.max(rb)] = ra.min(rb);
                    }
                } else {
                    edge_owner.insert(key, t);
                }
            }
        }
        let mut label = vec![usize::MAX; self.num_triangles()];
        let mut ids: HashMap<usize, usize> = HashMap::new();
        for t in 0..self.num_triangles() {
            let r = find(&mut parent, t);
            let n = ids.len();
            label[t] = *ids.entry(r).or_insert(n);
        }
        let n = ids.len();
        (label, n)
    }

    /// Fails when some connected piece of material has no clamped boundary,
    /// which would leave a rigid-body mode in the elasticity system.
    pub fn check_clamped(&self, scenario: StressScenario) -> Result<()> {
        let (label, n) = self.components();
        let mut clamped = vec![false; n];
        let mut vertex_tri: HashMap<usize, usize> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                vertex_tri.entry(v).or_insert(t);
            }
        }
        for e in &self.boundary {
            if let SegmentSource::Side(s) = e.source {
                if scenario.is_dirichlet(s) {
                    clamped[label[vertex_tri[&e.v[0]]]] = true;
                }
            }
        }
        let free = clamped.iter().filter(|c| !**c).count();
        if free > 0 {
            return Err(Error::SingularSystem(format!(
                "{free} of {n} material pieces touch no clamped side"
            )));
        }
        Ok(())
    }

    /// Structural checks: positive orientation, every boundary edge used by
    /// exactly one triangle, interior edges by exactly two, and
    /// V - E + F = (#components) - (#holes).
    pub fn validate(&self) -> Result<()> {
        for t in 0..self.num_triangles() {
            let a = self.triangle_area(t);
            if !(a > 0.0) {
                return Err(Error::Meshing(format!("triangle {t} has non-positive area {a:.3e}")));
            }
        }
        let mut uses: HashMap<(usize, usize), u32> = HashMap::new();
        let mut directed: HashSet<(usize, usize)> = HashSet::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *uses.entry((a.min(b), a.max(b))).or_default() += 1;
                directed.insert((a, b));
            }
        }
        let mut bset = HashSet::new();
        for e in &self.boundary {
            let [a, b] = e.v;
            if !directed.contains(&(a, b)) {
                return Err(Error::NotBoundaryEdge(a, b));
            }
            bset.insert((a.min(b), a.max(b)));
        }
        for (k, n) in &uses {
            let expect = if bset.contains(k) { 1 } else { 2 };
            if *n != expect {
                return Err(Error::Meshing(format!(
                    "edge {k:?} is shared by {n} triangles, expected {expect}"
                )));
            }
        }
        let used: HashSet<usize> = self.triangles.iter().flatten().copied().collect();
        if used.len() != self.num_vertices() {
            return Err(Error::Meshing(format!(
                "{} of {} vertices are not used by any triangle",
                self.num_vertices() - used.len(),
                self.num_vertices()
            )));
        }
        let loops = self.boundary_loop_count();
        let (_, comps) = self.components();
        let holes = loops as i64 - comps as i64;
        let euler = self.num_vertices() as i64 - uses.len() as i64 + self.num_triangles() as i64;
        if euler != comps as i64 - holes {
            return Err(Error::Meshing(format!(
                "Euler characteristic {euler} does not match {comps} components with {holes} holes"
            )));
        }
        Ok(())
    }

    /// Number of closed boundary loops.
    pub fn boundary_loop_count(&self) -> usize {
        let next: HashMap<usize, usize> = self.boundary.iter().map(|e| (e.v[0], e.v[1])).collect();
        let mut seen = HashSet::new();
        let mut count = 0;
        for e in &self.boundary {
            if seen.contains(&e.v[0]) {
                continue;
            }
            count += 1;
            let mut cur = e.v[0];
            while seen.insert(cur) {
                cur = next[&cur];
            }
        }
        count
    }
}

fn min_angle(p: &[Point; 3]) -> f64 {
    (0..3)
        .map(|k| {
            let u = vec2::sub(p[(k + 1) % 3], p[k]);
            let v = vec2::sub(p[(k + 2) % 3], p[k]);
            vec2::cross(u, v).abs().atan2(vec2::dot(u, v))
        })
        .fold(f64::INFINITY, f64::min)
}

/// Uniform grid over boundary segments for proximity queries.
pub(crate) struct SegmentIndex {
    segs: Vec<(Point, Point, SegmentSource)>,
    cell: f64,
    grid: HashMap<(i64, i64), Vec<usize>>,
}

impl SegmentIndex {
    pub(crate) fn new(segs: Vec<(Point, Point, SegmentSource)>, cell: f64) -> Self {
        let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (k, (a, b, _)) in segs.iter().enumerate() {
            let bb = vec2::Aabb::of(&[*a, *b]);
            let (x0, y0) = key(bb.min, cell);
            let (x1, y1) = key(bb.max, cell);
            for gx in x0..=x1 {
                for gy in y0..=y1 {
                    grid.entry((gx, gy)).or_default().push(k);
                }
            }
        }
        SegmentIndex { segs, cell, grid }
    }

    /// Nearest segment within `radius`, with its distance.
    pub(crate) fn nearest(&self, p: Point, radius: f64) -> Option<(f64, SegmentSource)> {
        let (x0, y0) = key([p[0] - radius, p[1] - radius], self.cell);
        let (x1, y1) = key([p[0] + radius, p[1] + radius], self.cell);
        let mut best: Option<(f64, SegmentSource)> = None;
        for gx in x0..=x1 {
            for gy in y0..=y1 {
                let Some(list) = self.grid.get(&(gx, gy)) else {
                    continue;
                };
                for &k in list {
                    let (a, b, s) = self.segs[k];
                    let d = vec2::point_segment_distance(p, a, b);
                    if d <= radius && best.map_or(true, |(bd, _)| d < bd) {
                        best = Some((d, s));
                    }
                }
            }
        }
        best
    }
}

fn key(p: Point, cell: f64) -> (i64, i64) {
    ((p[0] / cell).floor() as i64, (p[1] / cell).floor() as i64)
}

/// Union of the cut polygons, used to skip seeds inside holes.
pub(crate) fn inside_any(polys: &[CutPolygon], boxes: &[vec2::Aabb], p: Point) -> bool {
    polys
        .iter()
        .zip(boxes)
        .any(|(poly, bb)| bb.contains(p) && vec2::point_in_polygon(p, &poly.points))
}
