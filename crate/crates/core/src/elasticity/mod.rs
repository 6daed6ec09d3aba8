//! Plane-strain linear elasticity with quadratic Lagrange elements: the state
//! problem, the two adjoint problems and pointwise stress evaluation.

pub mod quadrature;
mod space;
pub mod sparse;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::vec2::Point;
use crate::geometry::{MaterialParams, SegmentSource, Side, StressScenario};
use quadrature::{p2_gradients, p2_values, TRI6};
pub use space::{BoundaryTrace, ElementGeometry, FeSpace};
pub use sparse::{ReducedSolver, SolverKind, SymCsr};

pub type Tensor = [[f64; 2]; 2];

/// How the stress deviator is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Deviator {
    /// σ_d = σ − (tr σ / 2) I = 2μ (ε − (tr ε / 2) I).
    #[default]
    Corrected,
    /// σ_d = 2με − (div u) I, the simplified form with a dropped factor.
    Literal,
}

impl Deviator {
    /// σ_d as a linear map of the strain. The map is self-adjoint on
    /// symmetric tensors, which the adjoint load relies on.
    #[inline]
    pub fn apply(self, mu: f64, e: &Tensor) -> Tensor {
        let tr = e[0][0] + e[1][1];
        let shift = match self {
            Deviator::Corrected => mu * tr,
            Deviator::Literal => tr,
        };
        [
            [2.0 * mu * e[0][0] - shift, 2.0 * mu * e[0][1]],
            [2.0 * mu * e[1][0], 2.0 * mu * e[1][1] - shift],
        ]
    }
}

#[inline]
pub fn sym(g: &Tensor) -> Tensor {
    let off = 0.5 * (g[0][1] + g[1][0]);
    [[g[0][0], off], [off, g[1][1]]]
}

#[inline]
pub fn ddot(a: &Tensor, b: &Tensor) -> f64 {
    a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1]
}

#[inline]
pub fn det_i_plus(g: &Tensor) -> f64 {
    (1.0 + g[0][0]) * (1.0 + g[1][1]) - g[0][1] * g[1][0]
}

/// Derivative of `(σ_d : σ_d)^{p/2}` with respect to the strain:
/// `p s^{p/2-1} D(D(ε))`, zero where the deviator vanishes.
#[inline]
pub fn vm_adjoint_tensor(mu: f64, p: f64, deviator: Deviator, eps: &Tensor) -> Tensor {
    let dev = deviator.apply(mu, eps);
    let s = ddot(&dev, &dev);
    if s == 0.0 {
        return [[0.0; 2]; 2];
    }
    let c = p * s.powf(0.5 * p - 1.0);
    let t = deviator.apply(mu, &dev);
    [[c * t[0][0], c * t[0][1]], [c * t[1][0], c * t[1][1]]]
}

/// Cofactor of `I + ∇u`, i.e. `det(F) F^{-T}`.
#[inline]
pub fn cofactor_i_plus(g: &Tensor) -> Tensor {
    [[1.0 + g[1][1], -g[1][0]], [-g[0][1], 1.0 + g[0][0]]]
}

/// Strain, stress, deviator and von Mises stress at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StressState {
    pub strain: Tensor,
    pub stress: Tensor,
    pub deviator: Tensor,
    pub von_mises: f64,
}

/// Stresses from a displacement gradient.
pub fn stress_eval(mat: &MaterialParams, deviator: Deviator, grad_u: &Tensor) -> StressState {
    let strain = sym(grad_u);
    let stress = mat.stress(strain);
    let dev = deviator.apply(mat.lame_mu, &strain);
    StressState {
        strain,
        stress,
        deviator: dev,
        von_mises: ddot(&dev, &dev).sqrt(),
    }
}

/// Prescribed displacement: constrained dofs (sorted) and their values.
#[derive(Debug, Clone, PartialEq)]
pub struct Dirichlet {
    pub dofs: Vec<usize>,
    pub values: Vec<f64>,
}

impl Dirichlet {
    /// `g = magnitude · n` on the clamped sides of the scenario; a node on
    /// two clamped sides receives the sum of both sides' vectors.
    pub fn from_scenario(space: &FeSpace, scenario: StressScenario, magnitude: f64) -> Self {
        let mut sides: BTreeMap<usize, Vec<Side>> = BTreeMap::new();
        for (e, edge) in space.mesh.boundary.iter().enumerate() {
            if let SegmentSource::Side(s) = edge.source {
                if scenario.is_dirichlet(s) {
                    for node in [edge.v[0], edge.v[1], space.boundary_mid[e]] {
                        let list = sides.entry(node).or_default();
                        if !list.contains(&s) {
                            list.push(s);
                        }
                    }
                }
            }
        }
        let mut dofs = Vec::with_capacity(2 * sides.len());
        let mut values = Vec::with_capacity(2 * sides.len());
        for (node, list) in sides {
            let mut g = [0.0; 2];
            for s in list {
                let n = s.outward_normal();
                g[0] += magnitude * n[0];
                g[1] += magnitude * n[1];
            }
            dofs.extend([2 * node, 2 * node + 1]);
            values.extend(g);
        }
        Dirichlet { dofs, values }
    }

    /// Trace of the homogeneous stretch `magnitude · (2x − 1)` (per stretched
    /// axis, relative to the mesh bounding box) on the clamped sides. Equals
    /// `magnitude · n` away from corners; continuous at corners.
    pub fn affine_stretch(space: &FeSpace, scenario: StressScenario, magnitude: f64) -> Self {
        let (lo, hi) = space.mesh.bounding_box();
        let stretched = [scenario == StressScenario::Biaxial, true];
        Self::from_fn(
            &space,
            |s| scenario.is_dirichlet(s),
            |x| {
                let mut g = [0.0; 2];
                for k in 0..2 {
                    if stretched[k] {
                        g[k] = magnitude * (2.0 * (x[k] - lo[k]) / (hi[k] - lo[k]) - 1.0);
                    }
                }
                g
            },
        )
    }

    /// `u = g(x)` at every node of the square sides accepted by `clamp`.
    pub fn from_fn(space: &FeSpace, clamp: impl Fn(Side) -> bool, g: impl Fn(Point) -> Point) -> Self {
        Self::on_edges(space, |src| matches!(src, SegmentSource::Side(s) if clamp(s)), g)
    }

    /// `u = g(x)` on every boundary edge accepted by `select`, cut edges included.
    pub fn on_edges(space: &FeSpace, select: impl Fn(SegmentSource) -> bool, g: impl Fn(Point) -> Point) -> Self {
        let mut nodes: Vec<usize> = Vec::new();
        for (e, edge) in space.mesh.boundary.iter().enumerate() {
            if select(edge.source) {
                nodes.extend([edge.v[0], edge.v[1], space.boundary_mid[e]]);
            }
        }
        nodes.sort_unstable();
        nodes.dedup();
        let mut dofs = Vec::with_capacity(2 * nodes.len());
        let mut values = Vec::with_capacity(2 * nodes.len());
        for node in nodes {
            let v = g(space.nodes[node]);
            dofs.extend([2 * node, 2 * node + 1]);
            values.extend(v);
        }
        Dirichlet { dofs, values }
    }
}

/// Assembled and factorized state problem on one mesh. The adjoint problems
/// share the bilinear form and reuse the factorization.
#[derive(Debug)]
pub struct ElasticSystem {
    pub space: FeSpace,
    pub material: MaterialParams,
    pub stiffness: SymCsr,
    pub dirichlet: Dirichlet,
    solver: ReducedSolver,
}

impl ElasticSystem {
    pub fn new(space: FeSpace, material: MaterialParams, dirichlet: Dirichlet, kind: SolverKind) -> Result<Self> {
        check_constrained_components(&space, &dirichlet)?;
        let stiffness = assemble_stiffness(&space, &material);
        let mut constrained = vec![false; space.num_dofs()];
        for &d in &dirichlet.dofs {
            constrained[d] = true;
        }
        let solver = ReducedSolver::new(&stiffness, &constrained, kind)?;
        Ok(ElasticSystem {
            space,
            material,
            stiffness,
            dirichlet,
            solver,
        })
    }

    /// Scenario boundary data of the given rule.
    pub fn for_scenario(
        space: FeSpace,
        material: MaterialParams,
        scenario: StressScenario,
        magnitude: f64,
        rule: DatumRule,
        kind: SolverKind,
    ) -> Result<Self> {
        let d = match rule {
            DatumRule::Normal => Dirichlet::from_scenario(&space, scenario, magnitude),
            DatumRule::Affine => Dirichlet::affine_stretch(&space, scenario, magnitude),
        };
        Self::new(space, material, d, kind)
    }

    pub fn num_dofs(&self) -> usize {
        self.space.num_dofs()
    }

    /// Galerkin solution with the prescribed boundary values and an optional body force.
    pub fn solve_state(&self, body_force: Option<&dyn Fn(Point) -> Point>) -> Result<Vec<f64>> {
        let n = self.num_dofs();
        let mut lift = vec![0.0; n];
        for (&d, &v) in self.dirichlet.dofs.iter().zip(&self.dirichlet.values) {
            lift[d] = v;
        }
        let k_lift = self.stiffness.mul(&lift);
        let mut load = match body_force {
            Some(f) => self.body_load(f),
            None => vec![0.0; n],
        };
        for (l, k) in load.iter_mut().zip(&k_lift) {
            *l -= k;
        }
        let mut u = self.solve_free(&load)?;
        for (&d, &v) in self.dirichlet.dofs.iter().zip(&self.dirichlet.values) {
            u[d] = v;
        }
        Ok(u)
    }

    /// Solution vanishing on the clamped boundary for a full-length load vector.
    pub fn solve_homogeneous(&self, load: &[f64]) -> Result<Vec<f64>> {
        self.solve_free(load)
    }

    fn solve_free(&self, load: &[f64]) -> Result<Vec<f64>> {
        let b: Vec<f64> = self.solver.free.iter().map(|&d| load[d]).collect();
        let x = self.solver.solve(&b)?;
        let mut u = vec![0.0; self.num_dofs()];
        for (&d, xi) in self.solver.free.iter().zip(x) {
            u[d] = xi;
        }
        Ok(u)
    }

    /// `∫ f · v` for every basis function `v`.
    pub fn body_load(&self, f: &dyn Fn(Point) -> Point) -> Vec<f64> {
        let sp = &self.space;
        let mut load = vec![0.0; sp.num_dofs()];
        for e in 0..sp.num_elements() {
            let area = sp.geometry[e].area;
            for (l, w) in TRI6 {
                let fx = f(sp.point(e, l));
                let nv = p2_values(l);
                for (a, &node) in sp.elements[e].iter().enumerate() {
                    load[2 * node] += w * area * fx[0] * nv[a];
                    load[2 * node + 1] += w * area * fx[1] * nv[a];
                }
            }
        }
        load
    }

    /// `∫ T(x) : ∇v` for every basis function `v`, with `T` supplied per
    /// element and quadrature point index.
    pub fn tensor_load(&self, mut t: impl FnMut(usize, usize) -> Tensor) -> Vec<f64> {
        let sp = &self.space;
        let mut load = vec![0.0; sp.num_dofs()];
        for e in 0..sp.num_elements() {
            let g = &sp.geometry[e];
            for (q, (l, w)) in TRI6.iter().enumerate() {
                let tq = t(e, q);
                let dn = p2_gradients(*l, &g.grad_bary);
                let s = w * g.area;
                for (a, &node) in sp.elements[e].iter().enumerate() {
                    load[2 * node] += s * (tq[0][0] * dn[a][0] + tq[0][1] * dn[a][1]);
                    load[2 * node + 1] += s * (tq[1][0] * dn[a][0] + tq[1][1] * dn[a][1]);
                }
            }
        }
        load
    }

    /// `∇u` at every quadrature point, element-major.
    pub fn quadrature_gradients(&self, u: &[f64]) -> Vec<Tensor> {
        let sp = &self.space;
        let mut out = Vec::with_capacity(sp.num_elements() * TRI6.len());
        for e in 0..sp.num_elements() {
            for (l, _) in TRI6 {
                out.push(sp.grad(u, e, l));
            }
        }
        out
    }

    /// Adjoint of the von Mises functional `∫ s^{p/2}`, `s = σ_d : σ_d`:
    /// `∫ σ(p_adj) : ε(v) = ∫ p s^{p/2-1} σ_d(u) : σ_d(v)`.
    pub fn solve_adjoint_vm(&self, u: &[f64], p: f64, deviator: Deviator) -> Result<Vec<f64>> {
        if !(p >= 2.0) {
            return Err(Error::ParameterOutOfRange {
                name: "p",
                reason: format!("von Mises exponent {p} must be >= 2"),
            });
        }
        let mu = self.material.lame_mu;
        let grads = self.quadrature_gradients(u);
        let mut any = false;
        let load = self.tensor_load(|e, q| {
            let t = vm_adjoint_tensor(mu, p, deviator, &sym(&grads[e * TRI6.len() + q]));
            any |= t != [[0.0; 2]; 2];
            t
        });
        if !any {
            log::warn!("von Mises adjoint: deviatoric stress vanishes everywhere, adjoint is zero");
        }
        self.solve_homogeneous(&load)
    }

    /// Adjoint of the deformed area `∫ det(I + ∇u)`:
    /// `∫ σ(q) : ε(v) = ∫ det(F) F^{-T} : ∇v`, `F = I + ∇u`.
    pub fn solve_adjoint_area(&self, u: &[f64], policy: InversionPolicy) -> Result<Vec<f64>> {
        let grads = self.quadrature_gradients(u);
        if let Err(e) = check_invertible(&self.space, &grads) {
            match policy {
                InversionPolicy::Error => return Err(e),
                InversionPolicy::Warn => log::warn!("area adjoint: {e}; the cofactor load stays well defined"),
            }
        }
        let load = self.tensor_load(|e, q| {
            cofactor_i_plus(&grads[e * TRI6.len() + q])
        });
        self.solve_homogeneous(&load)
    }

    /// Stress state at a physical point.
    pub fn stress_at(&self, u: &[f64], x: Point, deviator: Deviator) -> Result<StressState> {
        let (e, l) = self.space.locate(x)?;
        Ok(stress_eval(&self.material, deviator, &self.space.grad(u, e, l)))
    }
}

/// How the scenario's boundary displacement is prescribed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatumRule {
    /// `g = magnitude · n`; a node on two clamped sides gets the sum.
    #[default]
    Normal,
    /// Trace of the homogeneous stretch, see [`Dirichlet::affine_stretch`].
    Affine,
}

/// What the area adjoint does when `det(I + ∇u) <= 0` somewhere.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InversionPolicy {
    Error,
    /// Log and continue; the cofactor load is polynomial in `∇u`. Linear
    /// elasticity at 25% prescribed stretch inverts near sharp cut tips.
    #[default]
    Warn,
}

/// Fails with the location of the first quadrature point where det(I + ∇u) <= 0.
pub fn check_invertible(space: &FeSpace, grads: &[Tensor]) -> Result<()> {
    for (k, g) in grads.iter().enumerate() {
        let det = det_i_plus(g);
        if !(det > 0.0) {
            let (e, q) = (k / TRI6.len(), k % TRI6.len());
            let x = space.point(e, TRI6[q].0);
            return Err(Error::InvertedElement { det, x: x[0], y: x[1] });
        }
    }
    Ok(())
}

fn check_constrained_components(space: &FeSpace, d: &Dirichlet) -> Result<()> {
    let (label, n) = space.mesh.components();
    let mut fixed = vec![false; n];
    let mut node_constrained = vec![false; space.num_nodes()];
    for &dof in &d.dofs {
        node_constrained[dof / 2] = true;
    }
    for (e, el) in space.elements.iter().enumerate() {
        if el.iter().any(|&node| node_constrained[node]) {
            fixed[label[e]] = true;
        }
    }
    let free = fixed.iter().filter(|f| !**f).count();
    if free > 0 {
        return Err(Error::SingularSystem(format!(
            "{free} of {n} connected material pieces carry no prescribed displacement"
        )));
    }
    Ok(())
}

/// Global stiffness matrix of `∫ σ(u) : ε(v)`.
pub fn assemble_stiffness(space: &FeSpace, mat: &MaterialParams) -> SymCsr {
    let mut k = SymCsr::p2_pattern(space.num_nodes(), &space.elements);
    let (mu, lambda) = (mat.lame_mu, mat.lame_lambda);
    for e in 0..space.num_elements() {
        let ke = element_stiffness(&space.geometry[e], mu, lambda);
        let el = &space.elements[e];
        for a in 0..6 {
            for i in 0..2 {
                let r = 2 * el[a] + i;
                for b in 0..6 {
                    for j in 0..2 {
                        k.add(r, 2 * el[b] + j, ke[2 * a + i][2 * b + j]);
                    }
                }
            }
        }
    }
    k
}

/// 12x12 element matrix, dofs ordered (node, component).
pub fn element_stiffness(g: &ElementGeometry, mu: f64, lambda: f64) -> [[f64; 12]; 12] {
    let mut ke = [[0.0; 12]; 12];
    for (l, w) in TRI6 {
        let dn = p2_gradients(l, &g.grad_bary);
        let s = w * g.area;
        for a in 0..6 {
            for b in 0..6 {
                let dot = dn[a][0] * dn[b][0] + dn[a][1] * dn[b][1];
                for i in 0..2 {
                    for j in 0..2 {
                        let mut v = mu * dn[a][j] * dn[b][i] + lambda * dn[a][i] * dn[b][j];
                        if i == j {
                            v += mu * dot;
                        }
                        ke[2 * a + i][2 * b + j] += s * v;
                    }
                }
            }
        }
    }
    ke
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dilation_stress() {
        let mat = MaterialParams::skin();
        let st = stress_eval(&mat, Deviator::Corrected, &[[1.0, 0.0], [0.0, 1.0]]);
        let expect = 2.0 * mat.lame_mu + 2.0 * mat.lame_lambda;
        assert!((st.stress[0][0] - expect).abs() < 1e-12 && st.stress[0][1] == 0.0);
        assert!(st.deviator.iter().flatten().all(|v| v.abs() < 1e-12));
        assert_eq!(st.von_mises, 0.0);
    }

    #[test]
    fn simple_shear_von_mises() {
        let mat = MaterialParams::skin();
        let gamma = 0.01;
        let st = stress_eval(&mat, Deviator::Corrected, &[[0.0, gamma], [0.0, 0.0]]);
        assert!((st.strain[0][1] - gamma / 2.0).abs() < 1e-18);
        assert!((st.stress[0][1] - mat.lame_mu * gamma).abs() < 1e-15);
        assert!((st.von_mises - mat.lame_mu * gamma * 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn corrected_deviator_is_trace_free_and_matches_definition() {
        let mat = MaterialParams::new(3.0, 0.3).unwrap();
        let g = [[0.3, -0.2], [0.7, -0.1]];
        let st = stress_eval(&mat, Deviator::Corrected, &g);
        let tr = st.stress[0][0] + st.stress[1][1];
        for i in 0..2 {
            for j in 0..2 {
                let d = st.stress[i][j] - if i == j { 0.5 * tr } else { 0.0 };
                assert!((st.deviator[i][j] - d).abs() < 1e-14);
            }
        }
        assert!((st.deviator[0][0] + st.deviator[1][1]).abs() < 1e-14);
    }

    #[test]
    fn literal_deviator_form() {
        let mat = MaterialParams::new(3.0, 0.3).unwrap();
        let g = [[0.3, 0.0], [0.0, 0.1]];
        let st = stress_eval(&mat, Deviator::Literal, &g);
        assert!((st.deviator[0][0] - (2.0 * mat.lame_mu * 0.3 - 0.4)).abs() < 1e-14);
    }

    #[test]
    fn element_stiffness_is_symmetric_with_rigid_kernel() {
        let g = ElementGeometry {
            area: 0.5,
            grad_bary: [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]],
        };
        let ke = element_stiffness(&g, 1.3, 2.1);
        let nodes = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.5, 0.0], [0.5, 0.5], [0.0, 0.5]];
        for r in 0..12 {
            for c in 0..12 {
                assert!((ke[r][c] - ke[c][r]).abs() < 1e-13);
            }
        }
        // translations and the infinitesimal rotation carry no energy
        let modes: [Box<dyn Fn([f64; 2]) -> [f64; 2]>; 3] =
            [Box::new(|_| [1.0, 0.0]), Box::new(|_| [0.0, 1.0]), Box::new(|p| [-p[1], p[0]])];
        for m in &modes {
            let v: Vec<f64> = nodes.iter().flat_map(|p| m(*p)).collect();
            for r in 0..12 {
                let f: f64 = (0..12).map(|c| ke[r][c] * v[c]).sum();
                assert!(f.abs() < 1e-12);
            }
        }
    }
}
