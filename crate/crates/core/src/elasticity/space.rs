use std::collections::HashMap;

use super::quadrature::{p2_gradients, p2_values};
use crate::error::{Error, Result};
use crate::geometry::vec2::{self, Point};
use crate::mesh::Mesh;

/// Affine data of one triangle.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub area: f64,
    /// Gradients of the barycentric coordinates.
    pub grad_bary: [[f64; 2]; 3],
}

impl ElementGeometry {
    fn new(p: [Point; 3]) -> Self {
        let twice = vec2::orient(p[0], p[1], p[2]);
        let mut g = [[0.0; 2]; 3];
        for i in 0..3 {
            let (pj, pk) = (p[(i + 1) % 3], p[(i + 2) % 3]);
            g[i] = [(pj[1] - pk[1]) / twice, (pk[0] - pj[0]) / twice];
        }
        ElementGeometry {
            area: 0.5 * twice,
            grad_bary: g,
        }
    }
}

/// Where a boundary edge sits inside its (unique) adjacent triangle.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryTrace {
    pub element: usize,
    /// Local edge `k` joins local vertices `k` and `(k + 1) % 3`.
    pub local_edge: usize,
}

impl BoundaryTrace {
    /// Barycentric coordinates of the point at parameter `s` along the edge.
    pub fn bary(&self, s: f64) -> [f64; 3] {
        let mut l = [0.0; 3];
        l[self.local_edge] = 1.0 - s;
        l[(self.local_edge + 1) % 3] = s;
        l
    }
}

/// Continuous vector-valued P2 space: one node per vertex and per edge,
/// two interleaved dofs per node.
#[derive(Debug, Clone)]
pub struct FeSpace {
    pub mesh: Mesh,
    /// Node coordinates: mesh vertices first, then edge midpoints.
    pub nodes: Vec<Point>,
    /// Per triangle: the three vertex nodes, then midpoints (0,1), (1,2), (2,0).
    pub elements: Vec<[usize; 6]>,
    pub geometry: Vec<ElementGeometry>,
    /// Per mesh boundary edge: its triangle and local edge.
    pub traces: Vec<BoundaryTrace>,
    /// Per mesh boundary edge: its midpoint node.
    pub boundary_mid: Vec<usize>,
}

impl FeSpace {
    pub fn new(mesh: Mesh) -> Result<Self> {
        let nv = mesh.num_vertices();
        let mut nodes = mesh.vertices.clone();
        let mut mid: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * mesh.num_triangles() / 2 + nv);
        let mut owner: HashMap<(usize, usize), BoundaryTrace> = HashMap::with_capacity(3 * mesh.num_triangles());
        let mut elements = Vec::with_capacity(mesh.num_triangles());
        let mut geometry = Vec::with_capacity(mesh.num_triangles());
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let mut el = [tri[0], tri[1], tri[2], 0, 0, 0];
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                el[3 + k] = *mid.entry(key).or_insert_with(|| {
                    nodes.push(vec2::lerp(mesh.vertices[a], mesh.vertices[b], 0.5));
                    nodes.len() - 1
                });
                owner.insert((a, b), BoundaryTrace { element: t, local_edge: k });
            }
            let g = ElementGeometry::new(mesh.triangle_points(t));
            if !(g.area > 0.0) {
                return Err(Error::Meshing(format!("triangle {t} has non-positive area {:.3e}", g.area)));
            }
            elements.push(el);
            geometry.push(g);
        }
        let mut traces = Vec::with_capacity(mesh.boundary.len());
        let mut boundary_mid = Vec::with_capacity(mesh.boundary.len());
        for e in &mesh.boundary {
            let [a, b] = e.v;
            let tr = *owner.get(&(a, b)).ok_or(Error::NotBoundaryEdge(a, b))?;
            traces.push(tr);
            boundary_mid.push(elements[tr.element][3 + tr.local_edge]);
        }
        Ok(FeSpace {
            mesh,
            nodes,
            elements,
            geometry,
            traces,
            boundary_mid,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_dofs(&self) -> usize {
        2 * self.nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    /// Physical point of barycentric coordinates `l` in element `e`.
    pub fn point(&self, e: usize, l: [f64; 3]) -> Point {
        let [a, b, c] = self.mesh.triangles[e];
        let (pa, pb, pc) = (self.mesh.vertices[a], self.mesh.vertices[b], self.mesh.vertices[c]);
        [
            l[0] * pa[0] + l[1] * pb[0] + l[2] * pc[0],
            l[0] * pa[1] + l[1] * pb[1] + l[2] * pc[1],
        ]
    }

    /// `∇u` (row i = component, column j = derivative) at barycentric `l` of element `e`.
    pub fn grad(&self, u: &[f64], e: usize, l: [f64; 3]) -> [[f64; 2]; 2] {
        let dn = p2_gradients(l, &self.geometry[e].grad_bary);
        let mut g = [[0.0; 2]; 2];
        for (a, &node) in self.elements[e].iter().enumerate() {
            let (ux, uy) = (u[2 * node], u[2 * node + 1]);
            g[0][0] += ux * dn[a][0];
            g[0][1] += ux * dn[a][1];
            g[1][0] += uy * dn[a][0];
            g[1][1] += uy * dn[a][1];
        }
        g
    }

    /// `u` at barycentric `l` of element `e`.
    pub fn value(&self, u: &[f64], e: usize, l: [f64; 3]) -> Point {
        let n = p2_values(l);
        let mut v = [0.0; 2];
        for (a, &node) in self.elements[e].iter().enumerate() {
            v[0] += u[2 * node] * n[a];
            v[1] += u[2 * node + 1] * n[a];
        }
        v
    }

    /// Element containing `x` and its barycentric coordinates.
    pub fn locate(&self, x: Point) -> Result<(usize, [f64; 3])> {
        const EPS: f64 = 1e-12;
        for (e, g) in self.geometry.iter().enumerate() {
            let p0 = self.mesh.vertices[self.mesh.triangles[e][0]];
            let d = vec2::sub(x, p0);
            let l1 = vec2::dot(g.grad_bary[1], d);
            let l2 = vec2::dot(g.grad_bary[2], d);
            let l0 = 1.0 - l1 - l2;
            if l0 >= -EPS && l1 >= -EPS && l2 >= -EPS {
                return Ok((e, [l0, l1, l2]));
            }
        }
        Err(Error::PointNotFound(x[0], x[1]))
    }

    /// Interpolate a vector field at every node.
    pub fn interpolate(&self, f: impl Fn(Point) -> Point) -> Vec<f64> {
        let mut u = vec![0.0; self.num_dofs()];
        for (i, p) in self.nodes.iter().enumerate() {
            let v = f(*p);
            u[2 * i] = v[0];
            u[2 * i + 1] = v[1];
        }
        u
    }
}
