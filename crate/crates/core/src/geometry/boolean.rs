//! Boundary of a rectangle minus a union of simple polygons (or of the
//! union alone), with per-segment provenance.
//!
//! Every edge is split at its crossings with the other polygons, each piece
//! is kept or dropped by a midpoint classification, and the kept pieces are
//! chained into closed loops. Crossing points are computed once and shared by
//! both edges, so chaining works on integer ids only. Tangencies, collinear
//! overlaps and vertices lying on another edge are rejected as degenerate
//! rather than resolved.

use std::collections::HashMap;

use super::vec2::{self, Aabb, Point};
use super::Side;
use crate::error::{Error, Result};

/// Origin of one boundary segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SegmentSource {
    /// Part of a side of the outer square.
    Side(Side),
    /// Part of the boundary of cut `instance`, driven by design entry `design_index`.
    Cut { instance: usize, design_index: usize },
    /// Artificial cut line of a mirror-symmetric sub-domain.
    Symmetry,
}

impl SegmentSource {
    pub fn cut_instance(self) -> Option<usize> {
        match self {
            SegmentSource::Cut { instance, .. } => Some(instance),
            _ => None,
        }
    }
}

/// Closed polyline; segment `i` runs from `points[i]` to `points[i + 1]`
/// (cyclically) and comes from `sources[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryLoop {
    pub points: Vec<Point>,
    pub sources: Vec<SegmentSource>,
}

impl BoundaryLoop {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn segment(&self, i: usize) -> (Point, Point) {
        (self.points[i], self.points[(i + 1) % self.points.len()])
    }

    pub fn signed_area(&self) -> f64 {
        vec2::signed_area(&self.points)
    }

    /// Clockwise loops bound holes.
    pub fn is_hole(&self) -> bool {
        self.signed_area() < 0.0
    }

    pub fn perimeter(&self) -> f64 {
        (0..self.len())
            .map(|i| {
                let (a, b) = self.segment(i);
                vec2::dist(a, b)
            })
            .sum()
    }
}

/// Axis-aligned rectangle whose sides carry their own provenance
/// (bottom, right, top, left).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub min: Point,
    pub max: Point,
    pub sides: [SegmentSource; 4],
}

impl Region {
    /// The square `[0, edge]^2` with its four sides.
    pub fn square(edge: f64) -> Self {
        Region {
            min: [0.0, 0.0],
            max: [edge, edge],
            sides: [
                SegmentSource::Side(Side::Bottom),
                SegmentSource::Side(Side::Right),
                SegmentSource::Side(Side::Top),
                SegmentSource::Side(Side::Left),
            ],
        }
    }

    /// The upper-right quarter `[edge/2, edge]^2`; its left and bottom sides
    /// are symmetry lines.
    pub fn upper_right_quarter(edge: f64) -> Self {
        let h = 0.5 * edge;
        Region {
            min: [h, h],
            max: [edge, edge],
            sides: [
                SegmentSource::Symmetry,
                SegmentSource::Side(Side::Right),
                SegmentSource::Side(Side::Top),
                SegmentSource::Symmetry,
            ],
        }
    }

    fn corners(&self) -> Vec<Point> {
        vec![
            self.min,
            [self.max[0], self.min[1]],
            self.max,
            [self.min[0], self.max[1]],
        ]
    }

    fn strictly_contains(&self, p: Point) -> bool {
        p[0] > self.min[0] && p[0] < self.max[0] && p[1] > self.min[1] && p[1] < self.max[1]
    }

    pub fn area(&self) -> f64 {
        (self.max[0] - self.min[0]) * (self.max[1] - self.min[1])
    }
}

/// A counter-clockwise cut polygon.
#[derive(Debug, Clone, PartialEq)]
pub struct CutPolygon {
    pub points: Vec<Point>,
    pub instance: usize,
    pub design_index: usize,
}

/// Boundary loops of `region \ (∪ cuts)`: outer loops counter-clockwise,
/// holes clockwise, so the material is always on the left.
pub fn domain_boundary(region: &Region, cuts: &[CutPolygon]) -> Result<Vec<BoundaryLoop>> {
    Overlay::new(Some(region), cuts).extract()
}

/// Boundary loops of `∪ cuts`, counter-clockwise around each component.
pub fn union_cut_loops(cuts: &[CutPolygon]) -> Result<Vec<BoundaryLoop>> {
    Overlay::new(None, cuts).extract()
}

/// Reject configurations where two boundary parts come closer than `tol`
/// without meeting: distinct loops, or non-adjacent segments of one loop
/// whose separation along the loop is more than 20 times their distance.
pub fn check_near_touch(loops: &[BoundaryLoop], tol: f64) -> Result<()> {
    struct Seg {
        a: Point,
        b: Point,
        lp: usize,
        idx: usize,
    }
    let mut segs = Vec::new();
    let mut arc: Vec<Vec<f64>> = Vec::with_capacity(loops.len());
    let mut total_len = 0.0;
    for (lp, l) in loops.iter().enumerate() {
        let mut cum = Vec::with_capacity(l.len() + 1);
        let mut s = 0.0;
        cum.push(0.0);
        for i in 0..l.len() {
            let (a, b) = l.segment(i);
            s += vec2::dist(a, b);
            cum.push(s);
            segs.push(Seg { a, b, lp, idx: i });
        }
        total_len += s;
        arc.push(cum);
    }
    if segs.is_empty() {
        return Ok(());
    }
    let cell = (total_len / segs.len() as f64).max(tol) * 2.0;
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (k, s) in segs.iter().enumerate() {
        let bb = Aabb::of(&[s.a, s.b]).inflate(tol);
        let (x0, y0) = ((bb.min[0] / cell).floor() as i64, (bb.min[1] / cell).floor() as i64);
        let (x1, y1) = ((bb.max[0] / cell).floor() as i64, (bb.max[1] / cell).floor() as i64);
        for gx in x0..=x1 {
            for gy in y0..=y1 {
                grid.entry((gx, gy)).or_default().push(k);
            }
        }
    }
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for bucket in grid.values() {
        for (p, &i) in bucket.iter().enumerate() {
            for &j in &bucket[p + 1..] {
                pairs.push((i.min(j), i.max(j)));
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    for (i, j) in pairs {
        let (si, sj) = (&segs[i], &segs[j]);
        let d = vec2::segment_segment_distance(si.a, si.b, sj.a, sj.b);
        if d >= tol {
            continue;
        }
        if si.lp != sj.lp {
            return Err(Error::DegenerateGeometry(format!(
                "boundary loops {} and {} come within {d:.3e} of each other near ({:.6}, {:.6})",
                si.lp, sj.lp, si.a[0], si.a[1]
            )));
        }
        let n = loops[si.lp].len();
        let (lo, hi) = (si.idx.min(sj.idx), si.idx.max(sj.idx));
        if hi - lo <= 1 || (lo == 0 && hi == n - 1) {
            continue;
        }
        let cum = &arc[si.lp];
        let inner = cum[hi] - cum[lo + 1];
        let outer = cum[n] - cum[hi + 1] + cum[lo];
        let path = inner.min(outer);
        if path > 20.0 * d {
            return Err(Error::DegenerateGeometry(format!(
                "boundary pinches to {d:.3e} near ({:.6}, {:.6})",
                si.a[0], si.a[1]
            )));
        }
    }
    Ok(())
}

/// Relative parameter margin below which a crossing is treated as touching
/// an endpoint.
const END_EPS: f64 = 1e-10;

struct Poly {
    ids: Vec<usize>,
    sources: Vec<SegmentSource>,
    bbox: Aabb,
    /// Axis-aligned rectangle sides: Some((axis, value)) for exact crossings.
    axis_lines: Option<Vec<(usize, f64)>>,
}

struct Overlay<'a> {
    region: Option<&'a Region>,
    points: Vec<Point>,
    polys: Vec<Poly>,
    /// Per polygon, per edge: (parameter, point id) of interior split points.
    splits: Vec<Vec<Vec<(f64, usize)>>>,
}

impl<'a> Overlay<'a> {
    fn new(region: Option<&'a Region>, cuts: &'a [CutPolygon]) -> Self {
        let mut ov = Overlay {
            region,
            points: Vec::new(),
            polys: Vec::new(),
            splits: Vec::new(),
        };
        let region_box = region.map(|r| Aabb { min: r.min, max: r.max });
        if let Some(r) = region {
            let corners = r.corners();
            let lines = vec![(1, r.min[1]), (0, r.max[0]), (1, r.max[1]), (0, r.min[0])];
            ov.push_poly(corners, r.sides.to_vec(), Some(lines));
        }
        for c in cuts {
            let bb = Aabb::of(&c.points);
            if let Some(rb) = region_box {
                if !rb.overlaps(&bb) {
                    continue;
                }
            }
            let src = SegmentSource::Cut {
                instance: c.instance,
                design_index: c.design_index,
            };
            ov.push_poly(c.points.clone(), vec![src; c.points.len()], None);
        }
        ov
    }

    fn push_poly(&mut self, pts: Vec<Point>, sources: Vec<SegmentSource>, axis_lines: Option<Vec<(usize, f64)>>) {
        let base = self.points.len();
        let bbox = Aabb::of(&pts);
        let n = pts.len();
        self.points.extend(pts);
        self.polys.push(Poly {
            ids: (base..base + n).collect(),
            sources,
            bbox,
            axis_lines,
        });
        self.splits.push(vec![Vec::new(); n]);
    }

    fn edge(&self, p: usize, e: usize) -> (Point, Point) {
        let ids = &self.polys[p].ids;
        (self.points[ids[e]], self.points[ids[(e + 1) % ids.len()]])
    }

    fn intersect_all(&mut self) -> Result<()> {
        let np = self.polys.len();
        for p in 0..np {
            for q in p + 1..np {
                if !self.polys[p].bbox.overlaps(&self.polys[q].bbox) {
                    continue;
                }
                self.intersect_pair(p, q)?;
            }
        }
        Ok(())
    }

    fn intersect_pair(&mut self, p: usize, q: usize) -> Result<()> {
        let (np, nq) = (self.polys[p].ids.len(), self.polys[q].ids.len());
        let qbox = self.polys[q].bbox;
        for e in 0..np {
            let (a, b) = self.edge(p, e);
            let ebox = Aabb::of(&[a, b]);
            if !ebox.overlaps(&qbox) {
                continue;
            }
            for f in 0..nq {
                let (c, d) = self.edge(q, f);
                if !ebox.overlaps(&Aabb::of(&[c, d])) {
                    continue;
                }
                let Some((t, u)) = crossing(a, b, c, d)? else {
                    continue;
                };
                let x = match (&self.polys[p].axis_lines, &self.polys[q].axis_lines) {
                    (Some(lines), _) => on_axis_line(c, d, lines[e]),
                    (_, Some(lines)) => on_axis_line(a, b, lines[f]),
                    _ => vec2::lerp(a, b, t),
                };
                let id = self.points.len();
                self.points.push(x);
                self.splits[p][e].push((t, id));
                self.splits[q][f].push((u, id));
            }
        }
        Ok(())
    }

    fn inside_other_cut(&self, x: Point, own_poly: Option<usize>) -> bool {
        let first_cut = usize::from(self.region.is_some());
        (first_cut..self.polys.len()).any(|p| {
            Some(p) != own_poly && self.polys[p].bbox.contains(x) && {
                let pts: Vec<Point> = self.polys[p].ids.iter().map(|&i| self.points[i]).collect();
                vec2::point_in_polygon(x, &pts)
            }
        })
    }

    fn extract(mut self) -> Result<Vec<BoundaryLoop>> {
        self.intersect_all()?;
        let has_region = self.region.is_some();
        // kept directed pieces: start id -> (end id, source)
        let mut next: HashMap<usize, (usize, SegmentSource)> = HashMap::new();
        for p in 0..self.polys.len() {
            let is_region = has_region && p == 0;
            let n = self.polys[p].ids.len();
            for e in 0..n {
                let mut sp = std::mem::take(&mut self.splits[p][e]);
                sp.sort_by(|x, y| x.0.total_cmp(&y.0));
                let ids = &self.polys[p].ids;
                let mut chain = Vec::with_capacity(sp.len() + 2);
                chain.push(ids[e]);
                chain.extend(sp.iter().map(|s| s.1));
                chain.push(ids[(e + 1) % n]);
                let src = self.polys[p].sources[e];
                for w in chain.windows(2) {
                    let (s, t) = (w[0], w[1]);
                    let (ps, pt) = (self.points[s], self.points[t]);
                    let len = vec2::dist(ps, pt);
                    if len <= 1e-13 {
                        return Err(Error::DegenerateGeometry(format!(
                            "coincident crossings near ({:.6}, {:.6})",
                            ps[0], ps[1]
                        )));
                    }
                    let mid = vec2::lerp(ps, pt, 0.5);
                    let keep = if is_region {
                        !self.inside_other_cut(mid, None)
                    } else {
                        let in_region = self.region.map_or(true, |r| r.strictly_contains(mid));
                        in_region && !self.inside_other_cut(mid, Some(p))
                    };
                    if !keep {
                        continue;
                    }
                    let (from, to) = if has_region && !is_region { (t, s) } else { (s, t) };
                    if next.insert(from, (to, src)).is_some() {
                        let x = self.points[from];
                        return Err(Error::DegenerateGeometry(format!(
                            "boundary branches at ({:.6}, {:.6})",
                            x[0], x[1]
                        )));
                    }
                }
            }
        }
        let mut starts: Vec<usize> = next.keys().copied().collect();
        starts.sort_unstable();
        let mut visited = std::collections::HashSet::new();
        let mut loops = Vec::new();
        for s in starts {
            if visited.contains(&s) {
                continue;
            }
            let mut points = Vec::new();
            let mut sources = Vec::new();
            let mut cur = s;
            loop {
                if !visited.insert(cur) {
                    return Err(Error::DegenerateGeometry("boundary chain revisits a vertex".into()));
                }
                let Some(&(to, src)) = next.get(&cur) else {
                    let x = self.points[cur];
                    return Err(Error::DegenerateGeometry(format!(
                        "open boundary chain at ({:.6}, {:.6})",
                        x[0], x[1]
                    )));
                };
                points.push(self.points[cur]);
                sources.push(src);
                cur = to;
                if cur == s {
                    break;
                }
            }
            loops.push(BoundaryLoop { points, sources });
        }
        Ok(loops)
    }
}

/// Intersection of the exact line `x[axis] = value` with segment `ab`.
fn on_axis_line(a: Point, b: Point, (axis, value): (usize, f64)) -> Point {
    let other = 1 - axis;
    let t = (value - a[axis]) / (b[axis] - a[axis]);
    let mut x = [0.0; 2];
    x[axis] = value;
    x[other] = a[other] + t * (b[other] - a[other]);
    x
}

/// Proper crossing parameters `(t, u)` of segments `ab` and `cd`; touching or
/// collinear overlaps are errors.
fn crossing(a: Point, b: Point, c: Point, d: Point) -> Result<Option<(f64, f64)>> {
    let r = vec2::sub(b, a);
    let s = vec2::sub(d, c);
    let denom = vec2::cross(r, s);
    let qp = vec2::sub(c, a);
    let scale = vec2::norm(r) * vec2::norm(s);
    if denom.abs() <= 1e-14 * scale {
        let off = vec2::cross(qp, r).abs() / vec2::norm(r).max(f64::MIN_POSITIVE);
        if off <= 1e-12 * vec2::norm(r).max(vec2::norm(s)) {
            let rr = vec2::dot(r, r);
            let t0 = vec2::dot(qp, r) / rr;
            let t1 = vec2::dot(vec2::sub(d, a), r) / rr;
            if t0.max(t1) >= -END_EPS && t0.min(t1) <= 1.0 + END_EPS {
                return Err(Error::DegenerateGeometry(format!(
                    "collinear boundary overlap near ({:.6}, {:.6})",
                    c[0], c[1]
                )));
            }
        }
        return Ok(None);
    }
    let t = vec2::cross(qp, s) / denom;
    let u = vec2::cross(qp, r) / denom;
    let inside = |v: f64| v > END_EPS && v < 1.0 - END_EPS;
    let near = |v: f64| v >= -END_EPS && v <= 1.0 + END_EPS;
    if inside(t) && inside(u) {
        return Ok(Some((t, u)));
    }
    if near(t) && near(u) {
        let x = vec2::lerp(a, b, t.clamp(0.0, 1.0));
        return Err(Error::DegenerateGeometry(format!(
            "boundaries touch at ({:.6}, {:.6})",
            x[0], x[1]
        )));
    }
    Ok(None)
}
