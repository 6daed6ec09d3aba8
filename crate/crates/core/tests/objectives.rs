use graftopt::elasticity::{stress_eval, DatumRule, Deviator, Dirichlet, ElasticSystem, FeSpace, SolverKind};
use graftopt::mesh::{structured_square, MeshParams};
use graftopt::objectives::{self, compliance, deformed_area, vonmises_lp};
use graftopt::*;

fn solved_block() -> (ElasticSystem, Vec<f64>) {
    let layout = LayoutSpec::from_preset(LayoutPreset::Verification, [1, 1], [2, 2]);
    let mut p = Problem::new(layout, StressScenario::Uniaxial, ObjectiveKind::Compliance);
    p.mesh = MeshParams::with_target_h(0.05);
    let mesh = p.build_mesh(&DesignVector::new(vec![0.3, 1.2, 2.0, 2.9])).unwrap();
    let sys = p.system(mesh).unwrap();
    let u = sys.solve_state(None).unwrap();
    (sys, u)
}

fn unit_square_system(clamp_all: bool, g: impl Fn([f64; 2]) -> [f64; 2]) -> ElasticSystem {
    let space = FeSpace::new(structured_square(1.0, 6)).unwrap();
    let d = Dirichlet::from_fn(&space, |_| clamp_all, g);
    ElasticSystem::new(space, MaterialParams::skin(), d, SolverKind::Direct).unwrap()
}

#[test]
fn deviator_is_trace_free_at_every_quadrature_point() {
    let (sys, u) = solved_block();
    let mut worst: f64 = 0.0;
    for g in sys.quadrature_gradients(&u) {
        let d = stress_eval(&sys.material, Deviator::Corrected, &g).deviator;
        worst = worst.max((d[0][0] + d[1][1]).abs());
    }
    assert!(worst <= 1e-10, "trace {worst:e}");
}

#[test]
fn compliance_equals_the_stiffness_quadratic_form() {
    let (sys, u) = solved_block();
    let c = compliance(&sys, &u);
    let q = sys.stiffness.quad_form(&u);
    assert!(((c - q) / q).abs() <= 1e-10, "{c} vs {q}");
}

#[test]
fn biaxial_stretch_of_the_plain_square_has_area_two_and_a_quarter() {
    for rule in [DatumRule::Normal, DatumRule::Affine] {
        let space = FeSpace::new(structured_square(1.0, 8)).unwrap();
        let sys = ElasticSystem::for_scenario(
            space,
            MaterialParams::skin(),
            StressScenario::Biaxial,
            0.25,
            rule,
            SolverKind::Direct,
        )
        .unwrap();
        let u = sys.solve_state(None).unwrap();
        let a = deformed_area(&sys, &u);
        assert!((a - 2.25).abs() <= 1e-6, "{rule:?}: {a}");
    }
}

#[test]
fn simple_shear_von_mises_norm() {
    let gamma = 0.1;
    let sys = unit_square_system(true, |x| [gamma * x[1], 0.0]);
    let u = sys.solve_state(None).unwrap();
    let expected = sys.material.lame_mu * gamma * 2f64.sqrt();
    for p in [2.0, 5.0, 8.0] {
        let m = vonmises_lp(&sys, &u, p, Deviator::Corrected);
        assert!((m - expected).abs() <= 1e-8, "p = {p}: {m} vs {expected}");
    }
}

#[test]
fn literal_deviator_differs_only_by_a_trace_term() {
    let (sys, u) = solved_block();
    let mu = sys.material.lame_mu;
    for g in sys.quadrature_gradients(&u).into_iter().take(50) {
        let c = stress_eval(&sys.material, Deviator::Corrected, &g).deviator;
        let l = stress_eval(&sys.material, Deviator::Literal, &g).deviator;
        let tr = g[0][0] + g[1][1];
        let shift = (mu - 1.0) * tr;
        assert!((l[0][0] - c[0][0] - shift).abs() < 1e-9);
        assert!((l[1][1] - c[1][1] - shift).abs() < 1e-9);
        assert!((l[0][1] - c[0][1]).abs() < 1e-12);
    }
}

#[test]
fn rigid_motion_has_no_energy() {
    let sys = unit_square_system(true, |x| [0.1 - 0.02 * x[1], -0.3 + 0.02 * x[0]]);
    let u = sys.solve_state(None).unwrap();
    assert!(compliance(&sys, &u).abs() < 1e-20);
    assert!(objectives::vonmises_power(&sys, &u, 5.0, Deviator::Corrected).abs() < 1e-20);
}

#[test]
fn deformed_area_reduces_to_the_domain_area_without_load() {
    let (sys, _) = solved_block();
    let zero = vec![0.0; sys.num_dofs()];
    let a0 = objectives::domain_area(&sys);
    assert!((deformed_area(&sys, &zero) - a0).abs() < 1e-12);
    // The four cuts remove 4 π a b.
    let cut = std::f64::consts::PI * 0.45 * 0.05 * 0.25;
    assert!((a0 - (1.0 - 4.0 * cut)).abs() < 5e-3);
}
