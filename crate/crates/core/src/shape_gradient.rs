//! Boundary (Hadamard) shape gradients with respect to the cut angles, and a
//! mesh-morphing finite-difference oracle.
//!
//! Rotating cut `j` about its center moves its boundary with velocity
//! `θ_j = R90 (x - c_j)`. Each functional's derivative along `θ_j` is a
//! boundary integral `∮ D (θ_j · n) ds` over the exposed boundary of cut `j`,
//! where `n` points out of the material and `D` is a density built from the
//! state and, for the non-self-adjoint functionals, an adjoint state.

use serde::{Deserialize, Serialize};

use crate::elasticity::quadrature::{GAUSS3, TRI6};
use crate::elasticity::{
    cofactor_i_plus, ddot, det_i_plus, stress_eval, sym, vm_adjoint_tensor, Deviator, ElasticSystem, Tensor,
};
use crate::error::{Error, Result};
use crate::geometry::vec2::{self, Point};
use crate::geometry::{CutoffSpec, LayoutSpec};
use crate::mesh::Mesh;

/// Per-cut-instance integrals `∮_{∂ω_j} D (θ_j · n) ds`, where the density
/// receives the element, barycentric point and displacement gradient data.
pub fn instance_integrals(sys: &ElasticSystem, mut density: impl FnMut(usize, [f64; 3]) -> f64) -> Vec<f64> {
    let mesh = &sys.space.mesh;
    let mut out = vec![0.0; mesh.cuts.len()];
    for (e, edge) in mesh.boundary.iter().enumerate() {
        let Some(j) = edge.source.cut_instance() else {
            continue;
        };
        let c = mesh.cuts[j].center;
        let n = mesh.boundary_normal(e);
        let len = mesh.edge_length(e);
        let [a, b] = edge.v;
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        let tr = sys.space.traces[e];
        let mut acc = 0.0;
        for (s, w) in GAUSS3 {
            let x = vec2::lerp(pa, pb, s);
            let theta_n = vec2::dot(vec2::perp(vec2::sub(x, c)), n);
            acc += w * density(tr.element, tr.bary(s)) * theta_n;
        }
        out[j] += acc * len;
    }
    out
}

/// Sum instance contributions into design entries.
pub fn aggregate(mesh: &Mesh, per_instance: &[f64], design_len: usize) -> Vec<f64> {
    let mut g = vec![0.0; design_len];
    for (c, v) in mesh.cuts.iter().zip(per_instance) {
        g[c.design_index] += v;
    }
    g
}

fn grad_at(sys: &ElasticSystem, u: &[f64], e: usize, l: [f64; 3]) -> Tensor {
    sys.space.grad(u, e, l)
}

/// Per-instance derivative of `∫ σ(u):ε(u)`: density `σ(u):ε(u)`.
pub fn compliance_instances(sys: &ElasticSystem, u: &[f64]) -> Vec<f64> {
    instance_integrals(sys, |e, l| {
        let eps = sym(&grad_at(sys, u, e, l));
        ddot(&sys.material.stress(eps), &eps)
    })
}

pub fn grad_compliance(sys: &ElasticSystem, u: &[f64], design_len: usize) -> Vec<f64> {
    aggregate(&sys.space.mesh, &compliance_instances(sys, u), design_len)
}

/// Per-instance derivative of `J = ∫ s^{p/2}`: density `s^{p/2} − σ(p_adj):ε(u)`.
pub fn vonmises_power_instances(sys: &ElasticSystem, u: &[f64], p_adj: &[f64], p: f64, deviator: Deviator) -> Vec<f64> {
    instance_integrals(sys, |e, l| {
        let st = stress_eval(&sys.material, deviator, &grad_at(sys, u, e, l));
        let s = ddot(&st.deviator, &st.deviator);
        let sp = sys.material.stress(sym(&grad_at(sys, p_adj, e, l)));
        s.powf(0.5 * p) - ddot(&sp, &st.strain)
    })
}

/// Derivative of `M = J^{1/p}`: `(1/p) J^{1/p − 1} dJ`.
pub fn grad_vonmises(
    sys: &ElasticSystem,
    u: &[f64],
    p_adj: &[f64],
    p: f64,
    deviator: Deviator,
    j_value: f64,
    design_len: usize,
) -> Vec<f64> {
    let dj = aggregate(&sys.space.mesh, &vonmises_power_instances(sys, u, p_adj, p, deviator), design_len);
    let scale = if j_value > 0.0 { j_value.powf(1.0 / p - 1.0) / p } else { 0.0 };
    dj.into_iter().map(|v| scale * v).collect()
}

/// Per-instance derivative of `∫ det(I + ∇u)`: density `det(I + ∇u) − σ(u):ε(q)`.
pub fn area_instances(sys: &ElasticSystem, u: &[f64], q_adj: &[f64]) -> Vec<f64> {
    instance_integrals(sys, |e, l| {
        let g = grad_at(sys, u, e, l);
        let su = sys.material.stress(sym(&g));
        let eq = sym(&grad_at(sys, q_adj, e, l));
        det_i_plus(&g) - ddot(&su, &eq)
    })
}

pub fn grad_area(sys: &ElasticSystem, u: &[f64], q_adj: &[f64], design_len: usize) -> Vec<f64> {
    aggregate(&sys.space.mesh, &area_instances(sys, u, q_adj), design_len)
}

/// Which expression of the shape derivative to evaluate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientForm {
    /// Boundary integrals over the exposed cut edges.
    #[default]
    Boundary,
    /// Equivalent domain integrals with the cutoff-blended rotation field;
    /// the exact derivative of the discrete functional under mesh morphing.
    /// Needs disjoint cutoff annuli.
    Volume,
}

fn matmul(a: &Tensor, b: &Tensor) -> Tensor {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

/// Domain form: for every design index, `Σ_e Σ_q w f(e, q, ∇V)` where `V`
/// is the P1 interpolant of the morph velocity `χ R90 (x − c)`.
pub fn volume_integrals(
    sys: &ElasticSystem,
    layout: &LayoutSpec,
    design_len: usize,
    f: impl Fn(usize, usize, &Tensor) -> f64,
) -> Result<Vec<f64>> {
    let mesh = &sys.space.mesh;
    let mut out = vec![0.0; design_len];
    let mut vel = vec![[0.0; 2]; mesh.num_vertices()];
    for (k, slot) in out.iter_mut().enumerate() {
        vel.iter_mut().for_each(|v| *v = [0.0; 2]);
        let mut any = false;
        for (i, c) in mesh.cuts.iter().enumerate() {
            if c.design_index != k {
                continue;
            }
            let cut = CutoffSpec::for_cut(layout, c, i)?;
            for (v, x) in vel.iter_mut().zip(&mesh.vertices) {
                let chi = cut.value(*x);
                if chi != 0.0 {
                    *v = vec2::add(*v, vec2::scale(vec2::perp(vec2::sub(*x, c.center)), chi));
                    any = true;
                }
            }
        }
        if !any {
            continue;
        }
        let mut total = 0.0;
        for (e, tri) in mesh.triangles.iter().enumerate() {
            if tri.iter().all(|&v| vel[v] == [0.0; 2]) {
                continue;
            }
            let g = &sys.space.geometry[e];
            let mut b = [[0.0; 2]; 2];
            for (a, &v) in tri.iter().enumerate() {
                for i in 0..2 {
                    for j in 0..2 {
                        b[i][j] += vel[v][i] * g.grad_bary[a][j];
                    }
                }
            }
            let acc: f64 = TRI6.iter().enumerate().map(|(q, (_, w))| w * f(e, q, &b)).sum();
            total += acc * g.area;
        }
        *slot = total;
    }
    Ok(out)
}

/// `d/dt ∫ F(∇u)` at fixed coefficients: `F div V − F'(∇u) : (∇u ∇V)`.
fn transport(value: f64, dvalue: &Tensor, g: &Tensor, b: &Tensor) -> f64 {
    value * (b[0][0] + b[1][1]) - ddot(dvalue, &matmul(g, b))
}

/// `d/dt a(u, w)` at fixed coefficients.
fn bilinear_transport(sys: &ElasticSystem, gu: &Tensor, gw: &Tensor, b: &Tensor) -> f64 {
    let su = sys.material.stress(sym(gu));
    let sw = sys.material.stress(sym(gw));
    ddot(&su, &sym(gw)) * (b[0][0] + b[1][1]) - ddot(&su, &matmul(gw, b)) - ddot(&sw, &matmul(gu, b))
}

pub fn volume_grad_compliance(sys: &ElasticSystem, layout: &LayoutSpec, u: &[f64], design_len: usize) -> Result<Vec<f64>> {
    let gu = sys.quadrature_gradients(u);
    let n = TRI6.len();
    volume_integrals(sys, layout, design_len, |e, q, b| {
        let g = &gu[e * n + q];
        bilinear_transport(sys, g, g, b)
    })
}

#[allow(clippy::too_many_arguments)]
pub fn volume_grad_vonmises(
    sys: &ElasticSystem,
    layout: &LayoutSpec,
    u: &[f64],
    p_adj: &[f64],
    p: f64,
    deviator: Deviator,
    j_value: f64,
    design_len: usize,
) -> Result<Vec<f64>> {
    let (gu, gp) = (sys.quadrature_gradients(u), sys.quadrature_gradients(p_adj));
    let n = TRI6.len();
    let mu = sys.material.lame_mu;
    let dj = volume_integrals(sys, layout, design_len, |e, q, b| {
        let (g, gpa) = (&gu[e * n + q], &gp[e * n + q]);
        let eps = sym(g);
        let dev = deviator.apply(mu, &eps);
        let s = ddot(&dev, &dev);
        let t = vm_adjoint_tensor(mu, p, deviator, &eps);
        transport(s.powf(0.5 * p), &t, g, b) - bilinear_transport(sys, g, gpa, b)
    })?;
    let scale = if j_value > 0.0 { j_value.powf(1.0 / p - 1.0) / p } else { 0.0 };
    Ok(dj.into_iter().map(|v| scale * v).collect())
}

pub fn volume_grad_area(
    sys: &ElasticSystem,
    layout: &LayoutSpec,
    u: &[f64],
    q_adj: &[f64],
    design_len: usize,
) -> Result<Vec<f64>> {
    let (gu, gq) = (sys.quadrature_gradients(u), sys.quadrature_gradients(q_adj));
    let n = TRI6.len();
    volume_integrals(sys, layout, design_len, |e, q, b| {
        let (g, gqa) = (&gu[e * n + q], &gq[e * n + q]);
        transport(det_i_plus(g), &cofactor_i_plus(g), g, b) - bilinear_transport(sys, g, gqa, b)
    })
}

/// Vertex motion rotating every cut with a given design index by `delta`
/// about its center, blended to the identity by the smooth cutoff.
#[derive(Debug, Clone)]
pub struct MorphMap {
    pub design_index: usize,
    pub delta: f64,
    pub cutoffs: Vec<CutoffSpec>,
}

impl MorphMap {
    /// Requires disjoint cutoff annuli around every affected cut.
    pub fn new(layout: &LayoutSpec, mesh: &Mesh, design_index: usize, delta: f64) -> Result<Self> {
        let mut cutoffs = Vec::new();
        for (i, c) in mesh.cuts.iter().enumerate() {
            if c.design_index == design_index {
                cutoffs.push(CutoffSpec::for_cut(layout, c, i)?);
            }
        }
        Ok(MorphMap {
            design_index,
            delta,
            cutoffs,
        })
    }

    /// `φ(x) = x + χ(x) (R_δ (x − c) + c − x)`.
    pub fn apply(&self, x: Point) -> Point {
        let mut y = x;
        for c in &self.cutoffs {
            let chi = c.value(x);
            if chi == 0.0 {
                continue;
            }
            let r = vec2::add(vec2::rotate(vec2::sub(x, c.center), self.delta), c.center);
            y = vec2::add(y, vec2::scale(vec2::sub(r, x), chi));
        }
        y
    }

    /// Copy of `mesh` with moved vertices and rotated cut angles.
    pub fn morph(&self, mesh: &Mesh) -> Result<Mesh> {
        let mut out = mesh.clone();
        for v in &mut out.vertices {
            *v = self.apply(*v);
        }
        for c in &mut out.cuts {
            if c.design_index == self.design_index {
                c.angle += self.delta;
            }
        }
        for t in 0..out.num_triangles() {
            let a = out.triangle_area(t);
            if !(a > 0.0) {
                return Err(Error::TangledMorph { triangle: t, area: a });
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{instantiate_cuts, DesignVector, LayoutPreset};
    use crate::mesh::{generate, MeshParams};

    #[test]
    fn morph_rotates_cut_boundary_rigidly_and_fixes_square() {
        let layout = LayoutSpec::from_preset(LayoutPreset::Verification, [1, 1], [2, 2]);
        let design = DesignVector::new(vec![0.2, 1.0, 2.0, 3.0]);
        let mesh = generate(&layout, &design, &MeshParams::with_target_h(0.08)).unwrap();
        let map = MorphMap::new(&layout, &mesh, 1, 0.01).unwrap();
        let moved = map.morph(&mesh).unwrap();
        let cut = instantiate_cuts(&layout, &design).unwrap()[1];
        for e in mesh.cut_edges(1) {
            for v in mesh.boundary[e].v {
                let expect = vec2::add(vec2::rotate(vec2::sub(mesh.vertices[v], cut.center), 0.01), cut.center);
                assert!(vec2::dist(moved.vertices[v], expect) < 1e-15);
            }
        }
        for e in &mesh.boundary {
            if matches!(e.source, crate::geometry::SegmentSource::Side(_)) {
                for v in e.v {
                    assert_eq!(moved.vertices[v], mesh.vertices[v]);
                }
            }
        }
        assert!((moved.cuts[1].angle - 1.01).abs() < 1e-15);
    }

    #[test]
    fn standard_preset_has_no_morph() {
        let layout = LayoutSpec::standard();
        let design = DesignVector::new((0..16).map(|k| 0.37 * k as f64).collect::<Vec<_>>());
        let mesh = generate(&layout, &design, &MeshParams::with_target_h(0.05)).unwrap();
        assert!(matches!(MorphMap::new(&layout, &mesh, 0, 1e-3), Err(Error::NoCutoff { .. })));
    }
}
