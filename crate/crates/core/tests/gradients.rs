use std::f64::consts::PI;

use graftopt::mesh::{MeshParams, SymmetryMode};
use graftopt::shape_gradient::GradientForm;
use graftopt::{DesignVector, LayoutPreset, LayoutSpec, ObjectiveKind, Problem, StressScenario};

fn two_by_two(scenario: StressScenario, objective: ObjectiveKind, tip_h: f64) -> Problem {
    let layout = LayoutSpec::from_preset(LayoutPreset::Verification, [1, 1], [2, 2]);
    let mut p = Problem::new(layout, scenario, objective);
    p.inversion = graftopt::elasticity::InversionPolicy::Warn;
    p.mesh = MeshParams {
        tip_h: Some(tip_h),
        ..MeshParams::with_target_h(0.08)
    };
    p
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / scale).fold(0.0, f64::max)
}

#[test]
fn volume_form_is_the_derivative_of_the_discrete_functional() {
    let design = DesignVector::new(vec![0.3, 1.2, 2.5, 4.0]);
    for scenario in [StressScenario::Uniaxial, StressScenario::Biaxial] {
        for objective in [ObjectiveKind::Compliance, ObjectiveKind::von_mises(), ObjectiveKind::Area] {
            let mut p = two_by_two(scenario, objective, 0.005);
            p.gradient_form = GradientForm::Volume;
            let c = p.check_gradient(&design, 1e-3).unwrap();
            let err = max_rel(&c.analytic, &c.finite_difference);
            assert!(err < 1e-3, "{scenario:?} {}: {err:e}", objective.name());
        }
    }
}

#[test]
fn boundary_compliance_gradient_matches_fd_when_tips_are_resolved() {
    let design = DesignVector::new(vec![0.3, 1.2, 2.5, 4.0]);
    let p = two_by_two(StressScenario::Uniaxial, ObjectiveKind::Compliance, 0.0005);
    let c = p.check_gradient(&design, 1e-3).unwrap();
    let (worst, signs) = c.compare(1e-3);
    assert!(signs && worst < 0.02, "{worst} {:?} {:?}", c.analytic, c.finite_difference);
}

#[test]
fn boundary_gradient_improves_with_tip_refinement() {
    let design = DesignVector::new(vec![0.3, 1.2, 2.5, 4.0]);
    let coarse = two_by_two(StressScenario::Uniaxial, ObjectiveKind::Area, 0.01);
    let fine = two_by_two(StressScenario::Uniaxial, ObjectiveKind::Area, 0.001);
    let e = |p: &Problem| {
        let c = p.check_gradient(&design, 1e-3).unwrap();
        max_rel(&c.analytic, &c.finite_difference)
    };
    assert!(e(&fine) < 0.5 * e(&coarse));
}

#[test]
fn unloaded_area_gradient_is_zero() {
    let mut p = two_by_two(StressScenario::Biaxial, ObjectiveKind::Area, 0.01);
    p.load_magnitude = 0.0;
    let ev = p.evaluate(&DesignVector::new(vec![0.4, 2.0, 1.1, 3.0]), true).unwrap();
    assert!((ev.value - (1.0 - 4.0 * PI * 0.225 * 0.025)).abs() < 2e-3);
    for g in ev.gradient.unwrap() {
        assert!(g.abs() < 1e-12, "{g:e}");
    }
}

#[test]
fn fd_oracle_is_second_order_in_the_step() {
    let p = two_by_two(StressScenario::Uniaxial, ObjectiveKind::Compliance, 0.01);
    let design = DesignVector::new(vec![0.3, 1.2, 2.5, 4.0]);
    let mesh = p.build_mesh(&design).unwrap();
    let g: Vec<Vec<f64>> = [8e-3, 4e-3, 2e-3].iter().map(|&d| p.fd_gradient_on_mesh(&mesh, d).unwrap()).collect();
    for k in 0..4 {
        let ratio = (g[0][k] - g[1][k]) / (g[1][k] - g[2][k]);
        assert!((3.5..=4.5).contains(&ratio), "entry {k}: ratio {ratio}");
    }
}

#[test]
fn fd_step_outside_range_is_rejected() {
    let p = two_by_two(StressScenario::Uniaxial, ObjectiveKind::Compliance, 0.01);
    assert!(p.fd_gradient(&DesignVector::zeros(4), 0.1).is_err());
}

#[test]
fn centered_cut_aligned_with_axes_is_stationary() {
    let layout = LayoutSpec::from_preset(LayoutPreset::Verification, [1, 1], [1, 1]);
    for objective in [ObjectiveKind::Compliance, ObjectiveKind::von_mises(), ObjectiveKind::Area] {
        let mut p = Problem::new(layout.clone(), StressScenario::Uniaxial, objective);
        p.mesh = MeshParams {
            symmetry: SymmetryMode::Prefer,
            ..MeshParams::with_target_h(0.05)
        };
        let reference = p.evaluate(&DesignVector::new(vec![PI / 8.0]), true).unwrap().gradient.unwrap()[0];
        for angle in [0.0, PI / 2.0] {
            let g = p.evaluate(&DesignVector::new(vec![angle]), true).unwrap().gradient.unwrap()[0];
            assert!(g.abs() <= 1e-3 * reference.abs(), "{} at {angle}: {g:e} vs {reference:e}", objective.name());
        }
    }
}

#[test]
fn standard_layout_gradients_are_finite_and_cover_every_design_entry() {
    let mut p = Problem::new(LayoutSpec::from_preset(LayoutPreset::Standard, [1, 1], [4, 4]), StressScenario::Uniaxial, ObjectiveKind::Compliance);
    p.mesh = MeshParams::with_target_h(0.04);
    let design = DesignVector::new((0..16).map(|k| 0.31 * k as f64).collect::<Vec<_>>());
    let ev = p.evaluate(&design, true).unwrap();
    let g = ev.gradient.unwrap();
    assert_eq!(g.len(), 16);
    assert!(g.iter().all(|v| v.is_finite()));
    assert!(g.iter().filter(|v| **v != 0.0).count() >= 12);
    p.gradient_form = GradientForm::Volume;
    assert!(p.evaluate(&design, true).is_err());
}
