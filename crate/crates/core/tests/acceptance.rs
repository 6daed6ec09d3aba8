//! Acceptance report: one PASS/FAIL line per criterion, tolerances pinned
//! below. Failing criteria are reported, not hidden; set
//! `ACCEPTANCE_STRICT=1` to turn any FAIL into a non-zero exit, and
//! `ACCEPTANCE_ONLY=2,5` to run a subset.

use std::f64::consts::{FRAC_PI_2, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use graftopt::elasticity::{stress_eval, DatumRule, Deviator, Dirichlet, ElasticSystem, FeSpace, SolverKind};
use graftopt::geometry::circular_distance;
use graftopt::io::{self, parse_config};
use graftopt::mesh::{structured_square, MeshParams, SymmetryMode};
use graftopt::objectives::{compliance, deformed_area, vonmises_lp};
use graftopt::optimizer::{random_population, StopReason};
use graftopt::shape_gradient::GradientForm;
use graftopt::verification::{observed_order, patch_test};
use graftopt::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

// Criterion 1.
const PATCH_TOL: f64 = 1e-10;
const MIN_ORDER: f64 = 2.7;
// Criterion 2.
const FD_DELTA: f64 = 1e-3;
const FD_FLOOR: f64 = 1e-3;
const GRAD_REL_TOL: f64 = 0.02;
const GRAD_DESIGNS: usize = 10;
const GRAD_SEED: u64 = 2024;
// Criterion 3.
const STATIONARY_RATIO: f64 = 1e-3;
// Criterion 4.
const PERP_TOL_DEG: f64 = 5.0;
const PERP_GAP: f64 = 0.10;
const UNIAXIAL_SEED: u64 = 4;
// Criterion 5.
const CHECKER_TOL_DEG: f64 = 10.0;
const GA_SEEDS: [u64; 3] = [1, 2, 3];
const GA_POPULATION: usize = 40;
const GA_CAP: usize = 60;
// Criterion 6.
const TRACE_TOL: f64 = 1e-10;
const QUAD_TOL: f64 = 1e-10;
const AREA_TOL: f64 = 1e-6;
const SHEAR_TOL: f64 = 1e-8;

struct Outcome {
    pass: bool,
    summary: String,
    details: Vec<String>,
}

impl Outcome {
    fn new(pass: bool, summary: impl Into<String>) -> Self {
        Outcome {
            pass,
            summary: summary.into(),
            details: Vec::new(),
        }
    }
}

fn within(budget_min: f64, t: Duration) -> bool {
    t.as_secs_f64() <= budget_min * 60.0
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let m = MaterialParams::skin();
    let structured = patch_test(structured_square(1.0, 6), m).unwrap();
    let layout = LayoutSpec::from_preset(LayoutPreset::Verification, [1, 1], [2, 2]);
    let mut p = Problem::new(layout, StressScenario::Uniaxial, ObjectiveKind::Compliance);
    p.mesh = MeshParams::with_target_h(0.05);
    let cut = patch_test(p.build_mesh(&DesignVector::new(vec![0.3, 1.1, 2.0, 2.7])).unwrap(), m).unwrap();
    let (errors, order) = observed_order(&[4, 8, 16], m).unwrap();
    let el = t.elapsed();
    let pass = structured <= PATCH_TOL && cut <= PATCH_TOL && order >= MIN_ORDER && within(1.0, el);
    let mut o = Outcome::new(
        pass,
        format!(
            "FEM: patch error {:.1e} (square) / {:.1e} (cut domain) <= {PATCH_TOL:.0e}; L2 order {order:.3} >= {MIN_ORDER}; {:.1}s < 60s",
            structured,
            cut,
            el.as_secs_f64()
        ),
    );
    o.details.push(format!("L2 errors at n = 4, 8, 16: {:.3e} {:.3e} {:.3e}", errors[0], errors[1], errors[2]));
    o
}

/// Verification preset, one block of 2×2 cells, tips resolved finely
/// enough for the boundary expression to be meaningful.
fn gradient_problem(scenario: StressScenario, objective: ObjectiveKind) -> Problem {
    let layout = LayoutSpec::from_preset(LayoutPreset::Verification, [1, 1], [2, 2]);
    let mut p = Problem::new(layout, scenario, objective);
    p.mesh = MeshParams {
        tip_h: Some(3e-4),
        grading: 0.15,
        ..MeshParams::with_target_h(0.04)
    };
    p
}

/// Returns the boundary-form outcome and, as a supplement, the same
/// comparison for the volume expression on identical meshes.
fn criterion_2() -> (Outcome, Outcome) {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(GRAD_SEED);
    let designs = random_population(GRAD_DESIGNS, 4, &mut rng);
    let (mut b_pass, mut v_pass) = (true, true);
    let (mut b_lines, mut v_lines) = (Vec::new(), Vec::new());
    let (mut b_worst_all, mut v_worst_all) = (0.0f64, 0.0f64);
    for scenario in [StressScenario::Uniaxial, StressScenario::Biaxial] {
        for objective in [ObjectiveKind::Compliance, ObjectiveKind::von_mises(), ObjectiveKind::Area] {
            let p = gradient_problem(scenario, objective);
            let mut pv = p.clone();
            pv.gradient_form = GradientForm::Volume;
            let (mut bw, mut vw, mut bs, mut vs) = (0.0f64, 0.0f64, true, true);
            for d in &designs {
                let mesh = p.build_mesh(d).unwrap();
                let fd = p.fd_gradient_on_mesh(&mesh, FD_DELTA).unwrap();
                let b = p.evaluate_on_mesh(mesh.clone(), true).unwrap();
                let v = pv.evaluate_on_mesh(mesh, true).unwrap();
                for (g, w, s) in [(b, &mut bw, &mut bs), (v, &mut vw, &mut vs)] {
                    let c = GradientCheck {
                        value: g.value,
                        analytic: g.gradient.unwrap(),
                        finite_difference: fd.clone(),
                    };
                    let (err, signs) = c.compare(FD_FLOOR);
                    *w = w.max(err);
                    *s &= signs;
                }
            }
            let name = format!("{:?} {}", scenario, objective.name());
            b_lines.push(format!("{name:<22} boundary: max rel err {bw:.2e}, signs {}", if bs { "agree" } else { "DIFFER" }));
            v_lines.push(format!("{name:<22} volume:   max rel err {vw:.2e}, signs {}", if vs { "agree" } else { "DIFFER" }));
            b_pass &= bw <= GRAD_REL_TOL && bs;
            v_pass &= vw <= GRAD_REL_TOL && vs;
            b_worst_all = b_worst_all.max(bw);
            v_worst_all = v_worst_all.max(vw);
        }
    }
    let el = t.elapsed();
    let timed = within(20.0, el);
    let mut b = Outcome::new(
        b_pass && timed,
        format!(
            "gradients (boundary expression) vs FD oracle, {GRAD_DESIGNS} designs x 2 scenarios x 3 objectives: worst rel err {b_worst_all:.2e} (tol {GRAD_REL_TOL}, entries >= {FD_FLOOR:.0e} of max, delta {FD_DELTA:.0e}); {:.0}s < 1200s",
            el.as_secs_f64()
        ),
    );
    b.details = b_lines;
    let mut v = Outcome::new(
        v_pass && timed,
        format!("supplement: volume expression on the same meshes, worst rel err {v_worst_all:.2e} (tol {GRAD_REL_TOL})"),
    );
    v.details = v_lines;
    (b, v)
}

fn criterion_3() -> Outcome {
    let t = Instant::now();
    let layout = LayoutSpec::from_preset(LayoutPreset::Verification, [1, 1], [1, 1]);
    let mut pass = true;
    let mut details = Vec::new();
    for objective in [ObjectiveKind::Compliance, ObjectiveKind::von_mises(), ObjectiveKind::Area] {
        let mut p = Problem::new(layout, StressScenario::Uniaxial, objective);
        p.mesh = MeshParams {
            symmetry: SymmetryMode::Prefer,
            ..MeshParams::with_target_h(0.05)
        };
        let grad = |a: f64| p.evaluate(&DesignVector::new(vec![a]), true).unwrap().gradient.unwrap()[0];
        let reference = grad(PI / 8.0);
        for a in [0.0, FRAC_PI_2] {
            let g = grad(a);
            let ratio = g.abs() / reference.abs();
            pass &= ratio <= STATIONARY_RATIO;
            details.push(format!("{:<10} alpha = {:>4.1} deg: |g| / |g(pi/8)| = {ratio:.2e}", objective.name(), a.to_degrees()));
        }
    }
    let el = t.elapsed();
    let mut o = Outcome::new(
        pass && within(2.0, el),
        format!("symmetry stationarity: all ratios <= {STATIONARY_RATIO:.0e}; {:.1}s < 120s", el.as_secs_f64()),
    );
    o.details = details;
    o
}

fn angle_config(top: &str, tail: &str, out: &std::path::Path) -> io::RunConfig {
    let mut c = parse_config(&format!("{top}\n{tail}")).unwrap();
    c.output = out.to_path_buf();
    c
}

fn objective_column(dir: &std::path::Path) -> Vec<f64> {
    let csv = std::fs::read_to_string(dir.join("convergence.csv")).unwrap();
    csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect()
}

fn non_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0])
}

fn criterion_4() -> Outcome {
    let t = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let cfg = angle_config(
        &format!("scenario = \"uniaxial\"\nmethod = \"gd\"\nseed = {UNIAXIAL_SEED}\nsnapshot_every = 0"),
        "[layout]\npreset = \"verification\"\nblocks = [1, 1]\ncells_per_block = [4, 4]\n[mesh]\ntarget_h = 0.01\n[gd]\nmax_iters = 100",
        dir.path(),
    );
    let run = io::run(&cfg).unwrap();
    let trace = objective_column(dir.path());
    // Stretch along y: perpendicular cuts are horizontal, angle 0 mod π.
    let max_dev = run
        .design
        .angles()
        .iter()
        .map(|a| circular_distance(*a, 0.0, PI).to_degrees())
        .fold(0.0, f64::max);
    let p = cfg.problem().unwrap();
    let perp = p.evaluate(&DesignVector::zeros(16), false).unwrap().value;
    let par = p.evaluate(&DesignVector::new(vec![FRAC_PI_2; 16]), false).unwrap().value;
    let gap = 1.0 - perp / par;
    let el = t.elapsed();
    let (a, b, c) = (max_dev <= PERP_TOL_DEG, gap >= PERP_GAP, non_increasing(&trace));
    let mut o = Outcome::new(
        a && b && c && within(30.0, el),
        format!(
            "uniaxial optimum: (a) max deviation from perpendicular {max_dev:.2} deg <= {PERP_TOL_DEG} [{}]; (b) C_perp {perp:.4} vs C_par {par:.4}, gap {:.1}% >= {:.0}% [{}]; (c) trace non-increasing over {} rows [{}]; {:.0}s < 1800s",
            verdict(a),
            100.0 * gap,
            100.0 * PERP_GAP,
            verdict(b),
            trace.len(),
            verdict(c),
            el.as_secs_f64()
        ),
    );
    o.details.push(format!(
        "final design (deg mod 180): {:.1?}; stop {:?}; objective {:.4} -> {:.4}",
        run.design.angles().iter().map(|a| a.to_degrees().rem_euclid(180.0)).collect::<Vec<_>>(),
        run.gd_stop,
        trace[0],
        trace[trace.len() - 1]
    ));
    o
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAIL"
    }
}

/// Largest deviation (degrees, mod π) from the nearer of the two
/// alternating horizontal/vertical patterns on a `cx`-wide block.
fn checkerboard_deviation(design: &DesignVector, cx: usize) -> f64 {
    (0..2)
        .map(|shift| {
            design
                .angles()
                .iter()
                .enumerate()
                .map(|(k, a)| {
                    let target = if (k % cx + k / cx + shift) % 2 == 0 { 0.0 } else { FRAC_PI_2 };
                    circular_distance(*a, target, PI).to_degrees()
                })
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

fn criterion_5() -> Outcome {
    let t = Instant::now();
    let mut pass = true;
    let mut collapsed = false;
    let mut details = Vec::new();
    for seed in GA_SEEDS {
        let dir = tempfile::tempdir().unwrap();
        let cfg = angle_config(
            &format!("scenario = \"biaxial\"\nmethod = \"ga_then_gd\"\nseed = {seed}\nsnapshot_every = 0\ndatum = \"affine\""),
            &format!(
                "[layout]\npreset = \"verification\"\nblocks = [1, 1]\ncells_per_block = [4, 4]\n[mesh]\ntarget_h = 0.03\n[ga]\npopulation = {GA_POPULATION}\nmax_generations = {GA_CAP}\n[gd]\nmax_iters = 30"
            ),
            dir.path(),
        );
        let run = io::run(&cfg).unwrap();
        let trace = objective_column(dir.path());
        let dev = checkerboard_deviation(&run.design, 4);
        let stop = run.ga_stop.unwrap();
        let ok = non_increasing(&trace)
            && dev <= CHECKER_TOL_DEG
            && matches!(stop, StopReason::PopulationCollapsed | StopReason::GenerationCap);
        collapsed |= stop == StopReason::PopulationCollapsed;
        pass &= ok;
        details.push(format!(
            "seed {seed}: GA stop {stop:?}, {} rows, compliance {:.4} -> {:.4}, checkerboard deviation {dev:.2} deg [{}]",
            trace.len(),
            trace[0],
            trace[trace.len() - 1],
            verdict(ok)
        ));
    }
    let el = t.elapsed();
    let mut o = Outcome::new(
        pass && collapsed && within(120.0, el),
        format!(
            "biaxial GA(M={GA_POPULATION}, cap {GA_CAP}) then GD: monotone traces, checkerboard within {CHECKER_TOL_DEG} deg for every seed, collapse seen: {} [{}]; {:.0}s < 7200s",
            collapsed,
            verdict(collapsed),
            el.as_secs_f64()
        ),
    );
    o.details = details;
    o
}

fn criterion_6() -> Outcome {
    let layout = LayoutSpec::from_preset(LayoutPreset::Verification, [1, 1], [2, 2]);
    let mut p = Problem::new(layout, StressScenario::Uniaxial, ObjectiveKind::Compliance);
    p.mesh = MeshParams::with_target_h(0.05);
    let sys = p.system(p.build_mesh(&DesignVector::new(vec![0.3, 1.2, 2.0, 2.9])).unwrap()).unwrap();
    let u = sys.solve_state(None).unwrap();
    let trace = sys
        .quadrature_gradients(&u)
        .iter()
        .map(|g| {
            let d = stress_eval(&sys.material, Deviator::Corrected, g).deviator;
            (d[0][0] + d[1][1]).abs()
        })
        .fold(0.0, f64::max);
    let c = compliance(&sys, &u);
    let quad = (c - sys.stiffness.quad_form(&u)).abs() / c;

    let square = |g: &dyn Fn([f64; 2]) -> [f64; 2]| {
        let space = FeSpace::new(structured_square(1.0, 6)).unwrap();
        let d = Dirichlet::from_fn(&space, |_| true, g);
        ElasticSystem::new(space, MaterialParams::skin(), d, SolverKind::Direct).unwrap()
    };
    let space = FeSpace::new(structured_square(1.0, 8)).unwrap();
    let bi = ElasticSystem::for_scenario(
        space,
        MaterialParams::skin(),
        StressScenario::Biaxial,
        0.25,
        DatumRule::Normal,
        SolverKind::Direct,
    )
    .unwrap();
    let area = deformed_area(&bi, &bi.solve_state(None).unwrap());
    let gamma = 0.1;
    let shear = square(&|x| [gamma * x[1], 0.0]);
    let m = vonmises_lp(&shear, &shear.solve_state(None).unwrap(), 5.0, Deviator::Corrected);
    let expected = shear.material.lame_mu * gamma * 2f64.sqrt();
    let pass = trace <= TRACE_TOL
        && quad <= QUAD_TOL
        && (area - 2.25).abs() <= AREA_TOL
        && (m - expected).abs() <= SHEAR_TOL;
    Outcome::new(
        pass,
        format!(
            "identities: deviator trace {trace:.1e} <= {TRACE_TOL:.0e}; compliance vs u'Ku rel {quad:.1e} <= {QUAD_TOL:.0e}; biaxial area {area:.9} (2.25 +- {AREA_TOL:.0e}); shear M {m:.10} vs mu*gamma*sqrt2 {expected:.10} (+- {SHEAR_TOL:.0e})"
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut same = true;
    let mut details = Vec::new();
    for method in ["gd", "ga_then_gd"] {
        let mut bytes = Vec::new();
        for threads in [1, 2, 4] {
            let dir = tempfile::tempdir().unwrap();
            let mut cfg = angle_config(
                &format!("scenario = \"biaxial\"\nmethod = \"{method}\"\nseed = 99\nsnapshot_every = 0"),
                "[layout]\npreset = \"verification\"\nblocks = [1, 1]\ncells_per_block = [2, 2]\n[mesh]\ntarget_h = 0.05\n[ga]\npopulation = 8\nmax_generations = 4\n[gd]\nmax_iters = 5",
                dir.path(),
            );
            cfg.parallel = Some(threads);
            io::run(&cfg).unwrap();
            // Twice at the same thread count as well.
            let again = tempfile::tempdir().unwrap();
            cfg.output = again.path().to_path_buf();
            io::run(&cfg).unwrap();
            let a = std::fs::read(dir.path().join("convergence.csv")).unwrap();
            let b = std::fs::read(again.path().join("convergence.csv")).unwrap();
            same &= a == b;
            bytes.push(a);
        }
        let all = bytes.windows(2).all(|w| w[0] == w[1]);
        same &= all;
        details.push(format!("{method}: 1/2/4 threads, two runs each, identical: {all}"));
    }
    let mut o = Outcome::new(same, "determinism: convergence.csv byte-identical across repeated runs and thread counts");
    o.details = details;
    o
}

fn main() {
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let wanted = |k: u32| only.as_ref().is_none_or(|o| o.contains(&k));
    let mut failures = 0;
    let mut report = |id: &str, r: std::thread::Result<Outcome>| {
        let o = r.unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::new(false, format!("aborted: {msg}"))
        });
        failures += usize::from(!o.pass);
        println!("criterion {id}: {} - {}", if o.pass { "PASS" } else { "FAIL" }, o.summary);
        for d in &o.details {
            println!("    {d}");
        }
    };
    if wanted(1) {
        report("1", catch_unwind(criterion_1));
    }
    if wanted(2) {
        match catch_unwind(criterion_2) {
            Ok((b, v)) => {
                report("2", Ok(b));
                report("2 (supplement)", Ok(v));
            }
            Err(e) => report("2", Err(e)),
        }
    }
    if wanted(3) {
        report("3", catch_unwind(criterion_3));
    }
    if wanted(4) {
        report("4", catch_unwind(AssertUnwindSafe(criterion_4)));
    }
    if wanted(5) {
        report("5", catch_unwind(AssertUnwindSafe(criterion_5)));
    }
    if wanted(6) {
        report("6", catch_unwind(criterion_6));
    }
    if wanted(7) {
        report("7", catch_unwind(criterion_7));
    }
    println!("acceptance: {failures} criterion line(s) failing");
    if failures > 0 && std::env::var_os("ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
