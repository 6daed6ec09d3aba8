//! Run orchestration: optimizer dispatch, artifacts and the manifest.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{Method, RunConfig};
use super::output::{self, FieldSample, TraceRow};
use crate::error::{Error, Result};
use crate::geometry::DesignVector;
use crate::optimizer::{ga_run_with, gd_run_with, random_population, GaConfig, StopReason};
use crate::problem::{GradientCheck, Problem};

/// Outcome of a successful run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output: PathBuf,
    /// Objective in its natural sense (area is reported positive).
    pub objective: f64,
    pub design: DesignVector,
    pub ga_stop: Option<StopReason>,
    pub gd_stop: Option<StopReason>,
    pub rows: usize,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    program: &'static str,
    version: &'static str,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    exit_code: i32,
    seed: Option<u64>,
    threads: usize,
    config: &'a RunConfig,
    ga_stop: Option<StopReason>,
    gd_stop: Option<StopReason>,
    objective: Option<f64>,
    final_design_deg: Option<Vec<f64>>,
    artifacts: Vec<String>,
    started_unix_ms: u128,
    wall_clock_ms: u128,
}

/// Mutable state shared by the optimizer callbacks.
struct Recorder<'a> {
    cfg: &'a RunConfig,
    problem: &'a Problem,
    dir: &'a Path,
    start: Instant,
    rows: Vec<TraceRow>,
    artifacts: Vec<String>,
    error: Option<Error>,
}

impl Recorder<'_> {
    fn wall(&self) -> Option<u128> {
        self.cfg.record_wall_time.then(|| self.start.elapsed().as_millis())
    }

    fn write(&mut self, name: String, contents: &str) {
        if self.error.is_some() {
            return;
        }
        match output::write_file(&self.dir.join(&name), contents) {
            Ok(()) => self.artifacts.push(name),
            Err(e) => self.error = Some(e),
        }
    }

    fn snapshot(&mut self, iter: usize, design: &DesignVector) {
        let every = self.cfg.snapshot_every;
        if every > 0 && iter % every == 0 {
            let csv = output::design_csv(&self.problem.layout, design);
            self.write(format!("design_{iter:04}.csv"), &csv);
        }
    }

    fn objective(&self, fitness: f64) -> f64 {
        self.problem.objective.fitness(fitness)
    }

    /// Solve at `design` and write the undeformed and deformed field files.
    fn export(&mut self, design: &DesignVector, stem: &str) {
        if self.error.is_some() {
            return;
        }
        let p = self.problem;
        let res = p.build_mesh(design).and_then(|mesh| {
            let sys = p.system(mesh)?;
            let u = sys.solve_state(None)?;
            let fields = FieldSample::from_state(&sys, &u, p.deviator);
            output::export_fields(&sys.space.mesh, &fields, self.dir, stem)
        });
        match res {
            Ok(names) => self.artifacts.extend(names),
            Err(e) => self.error = Some(e),
        }
    }
}

fn thread_pool(parallel: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(parallel.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Execute the configured method and write every artifact into
/// `cfg.output`. On failure a manifest with `status = "failed"` is still
/// written next to whatever artifacts exist.
pub fn run(cfg: &RunConfig) -> Result<RunSummary> {
    let problem = cfg.problem()?;
    let dir = cfg.output.clone();
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let pool = thread_pool(cfg.parallel)?;
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0);
    let mut rec = Recorder {
        cfg,
        problem: &problem,
        dir: &dir,
        start: Instant::now(),
        rows: Vec::new(),
        artifacts: Vec::new(),
        error: None,
    };
    let outcome = pool.install(|| execute(&mut rec));
    let conv = output::convergence_csv(&rec.rows);
    rec.write("convergence.csv".to_string(), &conv);
    if cfg.plot_script {
        rec.write("convergence.gp".to_string(), &output::gnuplot_script(problem.objective.name()));
    }
    let (result, ga_stop, gd_stop) = match outcome {
        Ok(o) => (rec.error.take().map_or(Ok(o.0), Err), o.1, o.2),
        Err(e) => (Err(e), None, None),
    };
    let best = result.as_ref().ok().cloned();
    let manifest = Manifest {
        program: "graftopt",
        version: env!("CARGO_PKG_VERSION"),
        status: if result.is_ok() { "ok" } else { "failed" },
        error: result.as_ref().err().map(|e| e.to_string()),
        exit_code: result.as_ref().err().map_or(0, Error::exit_code),
        seed: cfg.seed,
        threads: pool.current_num_threads(),
        config: cfg,
        ga_stop,
        gd_stop,
        objective: best.as_ref().map(|b| b.1),
        final_design_deg: best.as_ref().map(|b| b.0.angles().iter().map(|a| a.to_degrees()).collect()),
        artifacts: rec.artifacts.clone(),
        started_unix_ms: started,
        wall_clock_ms: rec.start.elapsed().as_millis(),
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    let path = dir.join("manifest.json");
    output::write_file(&path, &json)?;
    let (design, objective) = result?;
    let rows = rec.rows.len();
    drop(rec);
    Ok(RunSummary {
        output: dir,
        objective,
        design,
        ga_stop,
        gd_stop,
        rows,
    })
}

type Outcome = ((DesignVector, f64), Option<StopReason>, Option<StopReason>);

fn execute(rec: &mut Recorder) -> Result<Outcome> {
    let cfg = rec.cfg;
    let p = rec.problem;
    let n = p.design_len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.unwrap_or(0));
    let (mut ga_stop, mut gd_stop) = (None, None);

    let mut start = cfg.initial_design();
    let mut next_iter = 0;
    if matches!(cfg.method, Method::Ga | Method::GaThenGd) {
        let ga: GaConfig = cfg.ga;
        let mut init = random_population(ga.population, n, &mut rng);
        if let Some(x) = start.take() {
            init[0] = x;
        }
        let run = ga_run_with(p, &init, &ga, cfg.seed.unwrap_or(0).wrapping_add(1), |g| {
            let r = &mut *rec;
            let row = TraceRow {
                iter: g.generation,
                objective: r.objective(g.best.fitness),
                grad_norm: None,
                step: None,
                pop_size: Some(g.population),
                wall_ms: r.wall(),
            };
            r.rows.push(row);
            r.snapshot(g.generation, &g.best.design);
        })?;
        let first = run.trace[0].best.design.clone();
        rec.export(&first, "fields_initial");
        next_iter = run.trace.len();
        ga_stop = Some(run.stop);
        start = Some(run.best().design.clone());
        if cfg.method == Method::Ga {
            let best = run.best().clone();
            return finish(rec, best.design, best.fitness, ga_stop, gd_stop);
        }
    }

    let x0 = start.unwrap_or_else(|| random_population(1, n, &mut rng).remove(0));
    if cfg.method == Method::Gd {
        rec.export(&x0, "fields_initial");
    }
    let offset = next_iter;
    let run = gd_run_with(p, &x0, &cfg.gd, |g| {
        let r = &mut *rec;
        let row = TraceRow {
            iter: offset + g.iter,
            objective: r.objective(g.fitness),
            grad_norm: Some(g.grad_norm),
            step: Some(g.step),
            pop_size: None,
            wall_ms: r.wall(),
        };
        r.rows.push(row);
        r.snapshot(offset + g.iter, &g.design);
    });
    gd_stop = Some(run.stop);
    if let Some(e) = run.failure {
        return Err(e);
    }
    let best = run.best().expect("a successful run records its start").clone();
    finish(rec, best.design, best.fitness, ga_stop, gd_stop)
}

fn finish(
    rec: &mut Recorder,
    design: DesignVector,
    fitness: f64,
    ga_stop: Option<StopReason>,
    gd_stop: Option<StopReason>,
) -> Result<Outcome> {
    let csv = output::design_csv(&rec.problem.layout, &design);
    rec.write("design_final.csv".to_string(), &csv);
    rec.export(&design, "fields_final");
    let objective = rec.objective(fitness);
    Ok(((design, objective), ga_stop, gd_stop))
}

/// Mesh the starting design (or the zero design) and write `mesh.vtk`.
pub fn export_mesh(cfg: &RunConfig) -> Result<(PathBuf, usize, usize)> {
    let problem = cfg.problem()?;
    let design = match cfg.initial_design() {
        Some(d) => d,
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.unwrap_or(0));
            random_population(1, problem.design_len(), &mut rng).remove(0)
        }
    };
    let mesh = problem.build_mesh(&design)?;
    std::fs::create_dir_all(&cfg.output).map_err(|e| Error::io(&cfg.output, e))?;
    let path = cfg.output.join("mesh.vtk");
    output::write_file(&path, &output::vtk_string(&mesh, None, false, "graftopt mesh"))?;
    Ok((path, mesh.num_vertices(), mesh.num_triangles()))
}

/// Analytic-vs-FD gradients at `cfg.check.designs` seeded random designs.
pub fn check_gradients(cfg: &RunConfig) -> Result<Vec<(DesignVector, GradientCheck)>> {
    let problem = cfg.problem()?;
    let pool = thread_pool(cfg.parallel)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.unwrap_or(0));
    let designs = random_population(cfg.check.designs, problem.design_len(), &mut rng);
    pool.install(|| {
        designs
            .into_iter()
            .map(|d| {
                let c = problem.check_gradient(&d, cfg.check.delta)?;
                Ok((d, c))
            })
            .collect()
    })
}
