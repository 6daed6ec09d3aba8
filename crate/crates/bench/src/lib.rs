//! Benchmarks of the per-design pipeline: meshing, assembly and
//! factorization, one evaluation with its gradient, and a short descent.

use criterion::{BenchmarkId, Criterion};
use graftopt::mesh::MeshParams;
use graftopt::optimizer::{Fitness, GdConfig};
use graftopt::shape_gradient::GradientForm;
use graftopt::{DesignVector, LayoutPreset, LayoutSpec, ObjectiveKind, Problem, StressScenario};

fn problem(h: f64, objective: ObjectiveKind) -> Problem {
    let layout = LayoutSpec::from_preset(LayoutPreset::Verification, [1, 1], [4, 4]);
    let mut p = Problem::new(layout, StressScenario::Uniaxial, objective);
    p.mesh = MeshParams::with_target_h(h);
    p
}

fn design() -> DesignVector {
    DesignVector::new((0..16).map(|k| 0.37 * k as f64).collect::<Vec<_>>())
}

pub fn meshing(c: &mut Criterion) {
    let mut g = c.benchmark_group("mesh");
    g.sample_size(10);
    for h in [0.04, 0.02] {
        let p = problem(h, ObjectiveKind::Compliance);
        let d = design();
        g.bench_with_input(BenchmarkId::from_parameter(h), &h, |b, _| b.iter(|| p.build_mesh(&d).unwrap()));
    }
    g.finish();
}

pub fn assembly(c: &mut Criterion) {
    let p = problem(0.02, ObjectiveKind::Compliance);
    let mesh = p.build_mesh(&design()).unwrap();
    let mut g = c.benchmark_group("assemble_factorize");
    g.sample_size(10);
    g.bench_function("h=0.02", |b| b.iter(|| p.system(mesh.clone()).unwrap()));
    g.finish();
}

pub fn evaluation(c: &mut Criterion) {
    let mut g = c.benchmark_group("evaluate_with_gradient");
    g.sample_size(10);
    let d = design();
    for objective in [ObjectiveKind::Compliance, ObjectiveKind::von_mises(), ObjectiveKind::Area] {
        for form in [GradientForm::Boundary, GradientForm::Volume] {
            let mut p = problem(0.03, objective);
            p.gradient_form = form;
            let id = format!("{}/{form:?}", objective.name());
            g.bench_function(id, |b| b.iter(|| p.fitness_and_gradient(&d).unwrap()));
        }
    }
    g.finish();
}

pub fn gradient_descent(c: &mut Criterion) {
    let p = problem(0.04, ObjectiveKind::Compliance);
    let cfg = GdConfig {
        max_iters: 3,
        ..GdConfig::default()
    };
    let mut g = c.benchmark_group("gd");
    g.sample_size(10);
    g.bench_function("3 iterations h=0.04", |b| b.iter(|| graftopt::optimizer::gd_run(&p, &design(), &cfg)));
    g.finish();
}
