use std::collections::{HashMap, HashSet};
use std::f64::consts::{PI, TAU};

use spade::handles::{FixedFaceHandle, InnerTag};
use spade::{AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation};

use super::{inside_any, BoundaryEdge, Mesh, MeshParams, SegmentIndex, SizeField, SymmetryMode};
use crate::error::{Error, Result};
use crate::geometry::vec2::{self, Aabb, Point};
use crate::geometry::{
    check_near_touch, circular_distance, cut_boundary_polyline, domain_boundary, instantiate_cuts, BoundaryLoop,
    CutInstance, CutPolygon, DesignVector, LayoutSpec, Region, SegmentSource, Side,
};

/// Cut polygons and the boundary loops of the region to be meshed.
#[derive(Debug, Clone)]
pub struct DomainGeometry {
    pub cuts: Vec<CutInstance>,
    pub polygons: Vec<CutPolygon>,
    pub region: Region,
    pub loops: Vec<BoundaryLoop>,
    /// True when `region` is the upper-right quarter and the mesh must be reflected.
    pub mirrored: bool,
}

impl DomainGeometry {
    /// Area of the meshed region (a quarter of the domain when mirrored).
    pub fn area(&self) -> f64 {
        self.loops.iter().map(|l| l.signed_area()).sum()
    }
}

/// Vertex count of each cut polygon: enough Chebyshev nodes to resolve the
/// tip size near the tips and the flank size along the sides.
pub fn polyline_vertex_count(layout: &LayoutSpec, params: &MeshParams) -> usize {
    if let Some(m) = params.polyline_vertices {
        return m;
    }
    let tip_h = params.resolved_tip_h(layout.semi_minor);
    let flank_h = (tip_h * params.target_h).sqrt();
    let need = TAU * (layout.semi_minor / tip_h).max(layout.semi_major / flank_h);
    (4 * (need / 4.0).ceil() as usize).max(16)
}

fn mirror_x(layout: &LayoutSpec, i: usize) -> usize {
    let (gx, gy) = layout.grid_position(i);
    layout.instance_at(layout.grid_cells()[0] - 1 - gx, gy)
}

fn mirror_y(layout: &LayoutSpec, i: usize) -> usize {
    let (gx, gy) = layout.grid_position(i);
    layout.instance_at(gx, layout.grid_cells()[1] - 1 - gy)
}

/// True when the cut pattern is invariant under both mirror lines through
/// the domain center.
pub fn is_mirror_symmetric(layout: &LayoutSpec, cuts: &[CutInstance]) -> bool {
    const TOL: f64 = 1e-12;
    cuts.iter().enumerate().all(|(i, c)| {
        let jx = &cuts[mirror_x(layout, i)];
        let jy = &cuts[mirror_y(layout, i)];
        circular_distance(jx.angle, PI - c.angle, PI) <= TOL && circular_distance(jy.angle, -c.angle, PI) <= TOL
    })
}

/// Cut polygons and region boundary for a design, with near-touch checks.
pub fn build_geometry(layout: &LayoutSpec, design: &DesignVector, params: &MeshParams) -> Result<DomainGeometry> {
    layout.validate()?;
    let cuts = instantiate_cuts(layout, design)?;
    let m = polyline_vertex_count(layout, params);
    let polygons = cuts
        .iter()
        .enumerate()
        .map(|(i, c)| {
            Ok(CutPolygon {
                points: cut_boundary_polyline(c, layout, m)?,
                instance: i,
                design_index: c.design_index,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mirrored = params.symmetry == SymmetryMode::Prefer && is_mirror_symmetric(layout, &cuts);
    let region = if mirrored {
        Region::upper_right_quarter(layout.domain_edge)
    } else {
        Region::square(layout.domain_edge)
    };
    let loops = domain_boundary(&region, &polygons)?;
    check_near_touch(&loops, 0.02 * layout.semi_minor)?;
    Ok(DomainGeometry {
        cuts,
        polygons,
        region,
        loops,
        mirrored,
    })
}

/// Mesh the domain of a design.
pub fn generate(layout: &LayoutSpec, design: &DesignVector, params: &MeshParams) -> Result<Mesh> {
    let errs = params.violations();
    if !errs.is_empty() {
        return Err(Error::Validation(errs));
    }
    let geom = build_geometry(layout, design, params)?;
    let tip_h = params.resolved_tip_h(layout.semi_minor);
    let size = SizeField::new(layout, &geom.cuts, params.target_h, tip_h, params.grading);
    let mut mesh = triangulate(&geom, &size, params)?;
    mesh.cuts = geom.cuts.clone();
    if geom.mirrored {
        let e = layout.domain_edge;
        mesh = reflect(&mesh, 0, 0.5 * e, e, |i| mirror_x(layout, i));
        mesh = reflect(&mesh, 1, 0.5 * e, e, |i| mirror_y(layout, i));
        mesh.mirrored = true;
    }
    let expect = geom.area() * if geom.mirrored { 4.0 } else { 1.0 };
    let got = mesh.area();
    if (got - expect).abs() > 1e-10 * expect {
        return Err(Error::Meshing(format!("mesh area {got} differs from domain area {expect}")));
    }
    mesh.validate()?;
    let min_angle = mesh.min_angle_deg();
    if min_angle < 1.0 {
        return Err(Error::MeshQuality {
            min_angle_deg: min_angle,
            attempts: 1,
        });
    }
    log::debug!(
        "mesh: {} vertices, {} triangles, min angle {:.1} deg, mirrored {}",
        mesh.num_vertices(),
        mesh.num_triangles(),
        min_angle,
        mesh.mirrored
    );
    Ok(mesh)
}

/// Structured `n x n` mesh of the square `[0, edge]^2` (each cell split along
/// alternating diagonals), without cuts.
pub fn structured_square(edge: f64, n: usize) -> Mesh {
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let h = edge / n as f64;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            let x = if i == n { edge } else { i as f64 * h };
            let y = if j == n { edge } else { j as f64 * h };
            vertices.push([x, y]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            if (i + j) % 2 == 0 {
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            } else {
                triangles.push([a, b, d]);
                triangles.push([b, c, d]);
            }
        }
    }
    let mut boundary = Vec::with_capacity(4 * n);
    for k in 0..n {
        boundary.push(side_edge([idx(k, 0), idx(k + 1, 0)], Side::Bottom));
        boundary.push(side_edge([idx(n, k), idx(n, k + 1)], Side::Right));
        boundary.push(side_edge([idx(k + 1, n), idx(k, n)], Side::Top));
        boundary.push(side_edge([idx(0, k + 1), idx(0, k)], Side::Left));
    }
    Mesh {
        vertices,
        triangles,
        boundary,
        cuts: Vec::new(),
        mirrored: false,
    }
}

fn side_edge(v: [usize; 2], s: Side) -> BoundaryEdge {
    BoundaryEdge {
        v,
        source: SegmentSource::Side(s),
    }
}

/// Split `a -> b` until every piece is no longer than the local size.
fn subdivide(a: Point, b: Point, size: &SizeField, out: &mut Vec<Point>, depth: u32) {
    let mid = vec2::lerp(a, b, 0.5);
    let h = size.at(a).min(size.at(b)).min(size.at(mid));
    let len = vec2::dist(a, b);
    if len <= 1.3 * h || depth > 40 {
        out.push(a);
        return;
    }
    let n = ((len / h).ceil() as usize).min(8).max(2);
    for k in 0..n {
        let p = vec2::lerp(a, b, k as f64 / n as f64);
        let q = if k + 1 == n { b } else { vec2::lerp(a, b, (k + 1) as f64 / n as f64) };
        subdivide(p, q, size, out, depth + 1);
    }
}

fn triangulate(geom: &DomainGeometry, size: &SizeField, params: &MeshParams) -> Result<Mesh> {
    let region = geom.region;
    let mut points: Vec<Point> = Vec::new();
    let mut edges: Vec<[usize; 2]> = Vec::new();
    let mut fine_segments = Vec::new();
    for l in &geom.loops {
        let start = points.len();
        for i in 0..l.len() {
            let (a, b) = l.segment(i);
            let first = points.len();
            subdivide(a, b, size, &mut points, 0);
            for k in first..points.len() {
                let q = if k + 1 < points.len() { points[k + 1] } else { b };
                fine_segments.push((points[k], q, l.sources[i]));
            }
        }
        let n = points.len() - start;
        for k in 0..n {
            edges.push([start + k, start + (k + 1) % n]);
        }
    }
    let boundary_count = points.len();
    let index = SegmentIndex::new(fine_segments, params.target_h);

    let boxes: Vec<Aabb> = geom.polygons.iter().map(|p| Aabb::of(&p.points)).collect();
    let width = region.max[0] - region.min[0];
    let height = region.max[1] - region.min[1];
    let n0 = (width.max(height) / params.target_h).ceil().max(1.0) as usize;
    let s0 = width.max(height) / n0 as f64;
    let mut stack: Vec<(Point, f64)> = Vec::new();
    for j in 0..n0 {
        for i in 0..n0 {
            let lo = [region.min[0] + i as f64 * s0, region.min[1] + j as f64 * s0];
            if lo[0] < region.max[0] && lo[1] < region.max[1] {
                stack.push((lo, s0));
            }
        }
    }
    while let Some((lo, s)) = stack.pop() {
        let c = [lo[0] + 0.5 * s, lo[1] + 0.5 * s];
        let h = size.at(c);
        if s > 1.2 * h && s > 0.5 * size.min_size() {
            let hs = 0.5 * s;
            for (dx, dy) in [(0.0, 0.0), (hs, 0.0), (0.0, hs), (hs, hs)] {
                stack.push(([lo[0] + dx, lo[1] + dy], hs));
            }
            continue;
        }
        if c[0] >= region.max[0] || c[1] >= region.max[1] {
            continue;
        }
        if index.nearest(c, 0.6 * s.max(h)).is_some() || inside_any(&geom.polygons, &boxes, c) {
            continue;
        }
        points.push(c);
    }
    log::trace!("mesh seeds: {} boundary + {} interior", boundary_count, points.len() - boundary_count);

    let verts: Vec<Point2<f64>> = points.iter().map(|p| Point2::new(p[0], p[1])).collect();
    let mut cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::bulk_load_cdt(verts, edges)
        .map_err(|e| Error::Meshing(format!("constrained triangulation failed: {e:?}")))?;
    let tip_area = 0.25 * size.min_size().powi(2);
    let refine = RefinementParameters::<f64>::new()
        .with_angle_limit(AngleLimit::from_deg(params.min_angle_deg))
        .with_max_allowed_area(0.6 * params.target_h * params.target_h)
        .with_min_required_area(0.05 * tip_area)
        .with_max_additional_vertices(4 * points.len() + 10_000)
        .exclude_outer_faces(true);
    let result = cdt.refine(refine);
    if !result.refinement_complete {
        log::warn!("mesh refinement hit its vertex budget");
    }
    let excluded: HashSet<FixedFaceHandle<InnerTag>> = result.excluded_faces.into_iter().collect();

    let mut remap: HashMap<usize, usize> = HashMap::new();
    let mut raw_tris: Vec<[usize; 3]> = Vec::new();
    for face in cdt.inner_faces() {
        if excluded.contains(&face.fix()) {
            continue;
        }
        raw_tris.push(face.vertices().map(|v| v.fix().index()));
    }
    let mut used: Vec<usize> = raw_tris.iter().flatten().copied().collect();
    used.sort_unstable();
    used.dedup();
    let mut vertices = Vec::with_capacity(used.len());
    for (k, &v) in used.iter().enumerate() {
        remap.insert(v, k);
        let p = cdt.vertex(spade::handles::FixedVertexHandle::from_index(v)).position();
        vertices.push([p.x, p.y]);
    }
    let triangles: Vec<[usize; 3]> = raw_tris.iter().map(|t| t.map(|v| remap[&v])).collect();

    let mut directed = HashSet::new();
    for t in &triangles {
        for k in 0..3 {
            directed.insert((t[k], t[(k + 1) % 3]));
        }
    }
    let mut boundary = Vec::new();
    let tol = 1e-9 * (width + height);
    for t in &triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            if directed.contains(&(b, a)) {
                continue;
            }
            let mid = vec2::lerp(vertices[a], vertices[b], 0.5);
            let Some((_, source)) = index.nearest(mid, tol) else {
                return Err(Error::Meshing(format!(
                    "boundary edge at ({:.6}, {:.6}) is off the domain boundary",
                    mid[0], mid[1]
                )));
            };
            boundary.push(BoundaryEdge { v: [a, b], source });
        }
    }
    // pin vertices on straight boundary lines to their exact coordinate
    let lines = [
        (1, region.min[1], region.sides[0]),
        (0, region.max[0], region.sides[1]),
        (1, region.max[1], region.sides[2]),
        (0, region.min[0], region.sides[3]),
    ];
    for e in &boundary {
        for &(axis, value, src) in &lines {
            if e.source == src {
                for v in e.v {
                    if (vertices[v][axis] - value).abs() <= tol {
                        vertices[v][axis] = value;
                    }
                }
            }
        }
    }
    boundary.sort_by_key(|e| (e.v[0], e.v[1]));
    Ok(Mesh {
        vertices,
        triangles,
        boundary,
        cuts: Vec::new(),
        mirrored: false,
    })
}

/// Union of `mesh` with its mirror image in the line `x[axis] = value`;
/// boundary edges on that line become interior.
fn reflect(mesh: &Mesh, axis: usize, value: f64, edge: f64, mirror_cut: impl Fn(usize) -> usize) -> Mesh {
    let n = mesh.num_vertices();
    let mut vertices = mesh.vertices.clone();
    let mut map = vec![0usize; n];
    for (v, p) in mesh.vertices.iter().enumerate() {
        if p[axis] == value {
            map[v] = v;
        } else {
            let mut q = *p;
            q[axis] = edge - p[axis];
            map[v] = vertices.len();
            vertices.push(q);
        }
    }
    let mut triangles = mesh.triangles.clone();
    triangles.extend(mesh.triangles.iter().map(|&[a, b, c]| [map[a], map[c], map[b]]));
    let on_line = |e: &BoundaryEdge| {
        e.source == SegmentSource::Symmetry && e.v.iter().all(|&v| mesh.vertices[v][axis] == value)
    };
    let mut boundary: Vec<BoundaryEdge> = mesh.boundary.iter().filter(|e| !on_line(e)).copied().collect();
    let mirrored: Vec<BoundaryEdge> = boundary
        .iter()
        .map(|e| BoundaryEdge {
            v: [map[e.v[1]], map[e.v[0]]],
            source: match e.source {
                SegmentSource::Side(s) => SegmentSource::Side(if axis == 0 { s.mirror_x() } else { s.mirror_y() }),
                SegmentSource::Cut { instance, design_index } => SegmentSource::Cut {
                    instance: mirror_cut(instance),
                    design_index,
                },
                SegmentSource::Symmetry => SegmentSource::Symmetry,
            },
        })
        .collect();
    boundary.extend(mirrored);
    // the mirror image of a cut keeps its own design index
    for e in &mut boundary {
        if let SegmentSource::Cut { instance, .. } = e.source {
            if let Some(c) = mesh.cuts.get(instance) {
                e.source = SegmentSource::Cut {
                    instance,
                    design_index: c.design_index,
                };
            }
        }
    }
    Mesh {
        vertices,
        triangles,
        boundary,
        cuts: mesh.cuts.clone(),
        mirrored: false,
    }
}
