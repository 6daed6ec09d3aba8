//! Self-checks of the finite-element solver: an affine patch test and a
//! manufactured smooth solution for convergence rates.

use std::f64::consts::PI;

use crate::elasticity::quadrature::TRI6;
use crate::elasticity::{Dirichlet, ElasticSystem, FeSpace, SolverKind};
use crate::error::Result;
use crate::geometry::vec2::Point;
use crate::geometry::MaterialParams;
use crate::mesh::{structured_square, Mesh};

/// Affine field reproduced exactly by any conforming discretization.
pub fn affine_field(x: Point) -> Point {
    [0.01 + 0.2 * x[0] - 0.05 * x[1], -0.02 + 0.07 * x[0] + 0.13 * x[1]]
}

/// Largest nodal error when the affine field is imposed on the whole
/// boundary of `mesh` (cut boundaries included) with no body force.
pub fn patch_test(mesh: Mesh, material: MaterialParams) -> Result<f64> {
    let space = FeSpace::new(mesh)?;
    let d = Dirichlet::on_edges(&space, |_| true, affine_field);
    let sys = ElasticSystem::new(space, material, d, SolverKind::Direct)?;
    let u = sys.solve_state(None)?;
    let exact = sys.space.interpolate(affine_field);
    Ok(u.iter().zip(&exact).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
}

/// Manufactured solution `u = (φ, φ)` with `φ = sin πx sin πy` on the unit square.
pub fn manufactured_solution(x: Point) -> Point {
    let phi = (PI * x[0]).sin() * (PI * x[1]).sin();
    [phi, phi]
}

/// Body force `f = −div σ(u)` for [`manufactured_solution`].
pub fn manufactured_force(material: &MaterialParams, x: Point) -> Point {
    let (mu, lambda) = (material.lame_mu, material.lame_lambda);
    let phi = (PI * x[0]).sin() * (PI * x[1]).sin();
    let cc = (PI * x[0]).cos() * (PI * x[1]).cos();
    let f = PI * PI * ((3.0 * mu + lambda) * phi - (mu + lambda) * cc);
    [f, f]
}

/// L² error of the discrete manufactured solution on an `n × n` structured mesh.
pub fn manufactured_l2_error(n: usize, material: MaterialParams) -> Result<f64> {
    let space = FeSpace::new(structured_square(1.0, n))?;
    let d = Dirichlet::from_fn(&space, |_| true, manufactured_solution);
    let sys = ElasticSystem::new(space, material, d, SolverKind::Direct)?;
    let force = |x: Point| manufactured_force(&material, x);
    let u = sys.solve_state(Some(&force))?;
    let sp = &sys.space;
    let mut err2 = 0.0;
    for e in 0..sp.num_elements() {
        let mut acc = 0.0;
        for (l, w) in TRI6 {
            let v = sp.value(&u, e, l);
            let ex = manufactured_solution(sp.point(e, l));
            acc += w * ((v[0] - ex[0]).powi(2) + (v[1] - ex[1]).powi(2));
        }
        err2 += acc * sp.geometry[e].area;
    }
    Ok(err2.sqrt())
}

/// Least-squares slope of `log error` against `log h` for meshes `n × n`.
pub fn observed_order(ns: &[usize], material: MaterialParams) -> Result<(Vec<f64>, f64)> {
    let errors = ns
        .iter()
        .map(|&n| manufactured_l2_error(n, material))
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = ns.iter().map(|&n| (1.0 / n as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok((errors, sxy / sxx))
}
