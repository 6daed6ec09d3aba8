//! Gradient descent with a quadratic line search, and a genetic algorithm
//! whose mutation is a normalized gradient step.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::DesignVector;
use crate::problem::Problem;

/// Something to minimize over design vectors.
pub trait Fitness: Sync {
    fn design_len(&self) -> usize;
    fn fitness(&self, x: &DesignVector) -> Result<f64>;
    fn fitness_and_gradient(&self, x: &DesignVector) -> Result<(f64, Vec<f64>)>;
}

fn wrap(x: &DesignVector, e: Error) -> Error {
    match e {
        e @ Error::Evaluation { .. } => e,
        e => Error::Evaluation {
            design: x.angles().to_vec(),
            source: Box::new(e),
        },
    }
}

impl Fitness for Problem {
    fn design_len(&self) -> usize {
        Problem::design_len(self)
    }

    fn fitness(&self, x: &DesignVector) -> Result<f64> {
        let ev = self.evaluate(x, false).map_err(|e| wrap(x, e))?;
        Ok(ev.fitness(self.objective))
    }

    fn fitness_and_gradient(&self, x: &DesignVector) -> Result<(f64, Vec<f64>)> {
        let ev = self.evaluate(x, true).map_err(|e| wrap(x, e))?;
        let g = ev.fitness_gradient(self.objective).expect("gradient requested");
        Ok((ev.fitness(self.objective), g))
    }
}

fn norm(g: &[f64]) -> f64 {
    g.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GdConfig {
    pub max_iters: usize,
    pub ls_max_evals: usize,
    /// Fixed first trial step; `None` uses `0.1 / ‖∇F‖`.
    pub initial_step: Option<f64>,
    /// Stop once `‖∇F‖₂` falls to this value.
    pub grad_tol: f64,
}

impl Default for GdConfig {
    fn default() -> Self {
        GdConfig {
            max_iters: 100,
            ls_max_evals: 5,
            initial_step: None,
            grad_tol: 1e-9,
        }
    }
}

impl GdConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.max_iters < 1 {
            v.push("gd.max_iters must be >= 1".to_string());
        }
        if self.ls_max_evals < 3 {
            v.push(format!("gd.ls_max_evals = {} must be >= 3", self.ls_max_evals));
        }
        if let Some(s) = self.initial_step {
            if !(s > 0.0 && s.is_finite()) {
                v.push(format!("gd.initial_step = {s} must be positive"));
            }
        }
        if !(self.grad_tol >= 0.0) {
            v.push(format!("gd.grad_tol = {} must be >= 0", self.grad_tol));
        }
        v
    }
}

/// Outcome of one line search.
#[derive(Debug, Clone, PartialEq)]
pub struct LineSearch {
    /// Accepted step; zero when no trial improved on the start.
    pub step: f64,
    pub fitness: f64,
    pub evaluations: usize,
}

/// Vertex of the parabola through three samples, if it opens upward.
fn parabola_vertex(p: [(f64, f64); 3]) -> Option<f64> {
    let [(x0, f0), (x1, f1), (x2, f2)] = p;
    let d01 = (f1 - f0) / (x1 - x0);
    let d12 = (f2 - f1) / (x2 - x1);
    let curv = (d12 - d01) / (x2 - x0);
    if !(curv > 0.0) || !curv.is_finite() {
        return None;
    }
    // f = f0 + d01 (x - x0) + curv (x - x0)(x - x1)
    let v = 0.5 * (x0 + x1) - 0.5 * d01 / curv;
    v.is_finite().then_some(v)
}

/// Quadratic line search along `x − γ d` starting from fitness `f0`.
///
/// Trials: `γ₀`, then `2γ₀` on descent or `γ₀/2` on ascent, then the vertex
/// of the parabola through the three best samples (doubling the largest
/// step when the fit is concave), halving again while every trial ascends.
pub fn line_search(
    mut f: impl FnMut(f64) -> Result<f64>,
    f0: f64,
    gamma0: f64,
    max_evals: usize,
) -> Result<LineSearch> {
    let mut samples = vec![(0.0, f0)];
    let mut next = gamma0;
    let mut evals = 0;
    while evals < max_evals && next > 0.0 && next.is_finite() {
        let fx = f(next)?;
        evals += 1;
        samples.push((next, fx));
        let best = samples
            .iter()
            .copied()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty");
        let smallest = samples.iter().skip(1).map(|s| s.0).fold(f64::INFINITY, f64::min);
        let largest = samples.iter().map(|s| s.0).fold(0.0, f64::max);
        if samples.len() == 2 {
            next = if fx < f0 { 2.0 * next } else { 0.5 * next };
            continue;
        }
        if best.0 == 0.0 && samples.len() < 4 {
            next = 0.5 * smallest;
            continue;
        }
        let mut sorted = samples.clone();
        sorted.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
        let mut three = [sorted[0], sorted[1], sorted[2]];
        three.sort_by(|a, b| a.0.total_cmp(&b.0));
        next = match parabola_vertex(three) {
            Some(v) if v > 0.0 => v.min(4.0 * largest),
            Some(_) => 0.5 * smallest,
            None => 2.0 * largest,
        };
        if samples.iter().any(|s| (s.0 - next).abs() <= 1e-12 * next.abs().max(1e-300)) {
            break;
        }
    }
    let best = samples
        .iter()
        .copied()
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)))
        .expect("non-empty");
    Ok(if best.1 < f0 {
        LineSearch {
            step: best.0,
            fitness: best.1,
            evaluations: evals,
        }
    } else {
        LineSearch {
            step: 0.0,
            fitness: f0,
            evaluations: evals,
        }
    })
}

/// One accepted gradient-descent iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct GdRecord {
    pub iter: usize,
    pub design: DesignVector,
    pub fitness: f64,
    pub grad_norm: f64,
    /// Step that produced this iterate (zero for the start).
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIterations,
    GradientTolerance,
    LineSearchStalled,
    PopulationCollapsed,
    GenerationCap,
    Failed,
}

#[derive(Debug)]
pub struct GdRun {
    pub trace: Vec<GdRecord>,
    pub stop: StopReason,
    /// Set when an evaluation aborted the run; `trace` holds the iterates so far.
    pub failure: Option<Error>,
}

impl GdRun {
    pub fn best(&self) -> Option<&GdRecord> {
        self.trace.last()
    }
}

/// Gradient descent `α ← α − γ ∇F` with a line-searched `γ`.
pub fn gd_run(f: &impl Fitness, x0: &DesignVector, cfg: &GdConfig) -> GdRun {
    gd_run_with(f, x0, cfg, |_| {})
}

/// As [`gd_run`], calling `observe` on every accepted iterate.
pub fn gd_run_with(f: &impl Fitness, x0: &DesignVector, cfg: &GdConfig, mut observe: impl FnMut(&GdRecord)) -> GdRun {
    let mut trace = Vec::new();
    let fail = |trace, e| GdRun {
        trace,
        stop: StopReason::Failed,
        failure: Some(e),
    };
    let (mut fx, mut g) = match f.fitness_and_gradient(x0) {
        Ok(v) => v,
        Err(e) => return fail(trace, e),
    };
    let mut x = x0.clone();
    let start = GdRecord {
        iter: 0,
        design: x.clone(),
        fitness: fx,
        grad_norm: norm(&g),
        step: 0.0,
    };
    observe(&start);
    trace.push(start);
    for iter in 1..=cfg.max_iters {
        let gn = norm(&g);
        if gn <= cfg.grad_tol {
            return GdRun {
                trace,
                stop: StopReason::GradientTolerance,
                failure: None,
            };
        }
        let gamma0 = cfg.initial_step.unwrap_or(0.1 / gn);
        let ls = line_search(|s| f.fitness(&x.stepped(&g, s)), fx, gamma0, cfg.ls_max_evals);
        let ls = match ls {
            Ok(ls) => ls,
            Err(e) => return fail(trace, e),
        };
        if ls.step == 0.0 {
            return GdRun {
                trace,
                stop: StopReason::LineSearchStalled,
                failure: None,
            };
        }
        x = x.stepped(&g, ls.step);
        match f.fitness_and_gradient(&x) {
            Ok((v, grad)) => {
                fx = v;
                g = grad;
            }
            Err(e) => return fail(trace, e),
        }
        let rec = GdRecord {
            iter,
            design: x.clone(),
            fitness: fx,
            grad_norm: norm(&g),
            step: ls.step,
        };
        observe(&rec);
        trace.push(rec);
    }
    let stop = if norm(&g) <= cfg.grad_tol {
        StopReason::GradientTolerance
    } else {
        StopReason::MaxIterations
    };
    GdRun {
        trace,
        stop,
        failure: None,
    }
}

/// A population member with its cached evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub design: DesignVector,
    pub fitness: f64,
    pub gradient: Vec<f64>,
    /// Generation in which the individual was created.
    pub age: usize,
}

/// `parent − ∇F/‖∇F‖₂`; `None` when the gradient vanishes.
pub fn mutation_step(parent: &Individual) -> Option<DesignVector> {
    let n = norm(&parent.gradient);
    (n > 0.0 && n.is_finite()).then(|| parent.design.stepped(&parent.gradient, 1.0 / n))
}

/// Swap the suffixes starting at `cut_point`.
pub fn crossover(p1: &DesignVector, p2: &DesignVector, cut_point: usize) -> (DesignVector, DesignVector) {
    assert!(cut_point >= 1 && cut_point < p1.len() && p1.len() == p2.len(), "1 <= cut_point < N");
    let (a, b) = (p1.angles(), p2.angles());
    let c1: Vec<f64> = a[..cut_point].iter().chain(&b[cut_point..]).copied().collect();
    let c2: Vec<f64> = b[..cut_point].iter().chain(&a[cut_point..]).copied().collect();
    (DesignVector::new(c1), DesignVector::new(c2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    /// Population capacity M.
    pub population: usize,
    pub max_generations: usize,
    /// Designs closer than this (max entrywise, mod π) are duplicates.
    pub dedup_tol: f64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population: 150,
            max_generations: 60,
            dedup_tol: 1e-3,
        }
    }
}

impl GaConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.population < 1 {
            v.push("ga.population must be >= 1".to_string());
        }
        if !(self.dedup_tol > 0.0 && self.dedup_tol < 1.0) {
            v.push(format!("ga.dedup_tol = {} must lie in (0, 1)", self.dedup_tol));
        }
        v
    }
}

/// Best member after each generation.
#[derive(Debug, Clone, PartialEq)]
pub struct GaGeneration {
    pub generation: usize,
    pub best: Individual,
    pub population: usize,
    /// Fresh objective evaluations performed in this generation.
    pub evaluations: usize,
}

#[derive(Debug)]
pub struct GaRun {
    pub trace: Vec<GaGeneration>,
    pub population: Vec<Individual>,
    pub stop: StopReason,
}

impl GaRun {
    pub fn best(&self) -> &Individual {
        &self.trace.last().expect("generation 0 is always recorded").best
    }
}

/// Evaluation cache keyed by the exact angle bits.
#[derive(Default)]
struct Cache(HashMap<Vec<u64>, (f64, Vec<f64>)>);

impl Cache {
    fn key(x: &DesignVector) -> Vec<u64> {
        x.angles().iter().map(|a| a.to_bits()).collect()
    }

    /// Evaluate every design (in parallel, cached). Failures become `None`.
    fn evaluate(&mut self, f: &impl Fitness, xs: &[DesignVector]) -> (Vec<Option<(f64, Vec<f64>)>>, usize) {
        let mut fresh: Vec<&DesignVector> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for x in xs {
            let k = Self::key(x);
            if !self.0.contains_key(&k) && seen.insert(k) {
                fresh.push(x);
            }
        }
        let results: Vec<Result<(f64, Vec<f64>)>> = fresh.par_iter().map(|x| f.fitness_and_gradient(x)).collect();
        let count = fresh.len();
        for (x, r) in fresh.into_iter().zip(results) {
            match r {
                Ok(v) => {
                    self.0.insert(Self::key(x), v);
                }
                Err(e) => log::warn!("skipping individual: {e}"),
            }
        }
        let out = xs.iter().map(|x| self.0.get(&Self::key(x)).cloned()).collect();
        (out, count)
    }
}

// Cuts are centrally symmetric: α and α + π mesh identically, so they are copies.
fn distinct(x: &DesignVector, kept: &[Individual], tol: f64) -> bool {
    kept.iter().all(|k| !k.design.layout_equivalent(x, tol))
}

/// Stable sort by fitness, then greedy removal of near-duplicates.
fn sort_unique(mut pool: Vec<Individual>, tol: f64) -> Vec<Individual> {
    pool.sort_by(|a, b| a.fitness.total_cmp(&b.fitness));
    let mut out: Vec<Individual> = Vec::with_capacity(pool.len());
    for ind in pool {
        if distinct(&ind.design, &out, tol) {
            out.push(ind);
        }
    }
    out
}

/// Random designs with entries uniform in `[0, 2π)`.
pub fn random_population(n: usize, len: usize, rng: &mut impl Rng) -> Vec<DesignVector> {
    (0..n)
        .map(|_| DesignVector::new((0..len).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect::<Vec<_>>()))
        .collect()
}

/// Genetic algorithm with family replacement.
///
/// Each generation: every parent is replaced by its mutant when the mutant
/// is fitter; the survivors are shuffled into pairs and each pair is
/// replaced by the two fittest distinct members of {parents, children};
/// near-duplicates are then removed. The population is never refilled, so
/// it shrinks as the best design spreads and the run stops when a single
/// individual remains or at the generation cap.
pub fn ga_run(f: &impl Fitness, initial: &[DesignVector], cfg: &GaConfig, seed: u64) -> Result<GaRun> {
    ga_run_with(f, initial, cfg, seed, |_| {})
}

pub fn ga_run_with(
    f: &impl Fitness,
    initial: &[DesignVector],
    cfg: &GaConfig,
    seed: u64,
    mut observe: impl FnMut(&GaGeneration),
) -> Result<GaRun> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cache = Cache::default();
    let n = f.design_len();
    let init: Vec<DesignVector> = initial.iter().take(cfg.population).cloned().collect();
    let (vals, evals) = cache.evaluate(f, &init);
    let mut pop: Vec<Individual> = init
        .into_iter()
        .zip(vals)
        .filter_map(|(design, v)| {
            v.map(|(fitness, gradient)| Individual {
                design,
                fitness,
                gradient,
                age: 0,
            })
        })
        .collect();
    if pop.is_empty() {
        return Err(Error::PopulationExhausted(initial.len().min(cfg.population)));
    }
    pop = sort_unique(pop, cfg.dedup_tol);
    let mut trace = Vec::new();
    let record = |generation: usize, pop: &[Individual], evaluations: usize| GaGeneration {
        generation,
        best: pop[0].clone(),
        population: pop.len(),
        evaluations,
    };
    trace.push(record(0, &pop, evals));
    observe(&trace[0]);
    let mut stop = StopReason::GenerationCap;
    for generation in 1..=cfg.max_generations {
        if pop.len() <= 1 {
            stop = StopReason::PopulationCollapsed;
            break;
        }
        // (1) mutation, each child competing with its own parent
        let mutants: Vec<Option<DesignVector>> = pop.iter().map(mutation_step).collect();
        let targets: Vec<DesignVector> = mutants.iter().flatten().cloned().collect();
        let (vals, mut evals) = cache.evaluate(f, &targets);
        let mut vals = vals.into_iter();
        for (parent, m) in pop.iter_mut().zip(mutants) {
            let Some(design) = m else { continue };
            if let Some((fitness, gradient)) = vals.next().expect("one value per mutant") {
                if fitness < parent.fitness {
                    *parent = Individual {
                        design,
                        fitness,
                        gradient,
                        age: generation,
                    };
                }
            }
        }
        // (2) elite: fitness order without duplicates
        pop = sort_unique(pop, cfg.dedup_tol);
        // (3) crossover of shuffled pairs
        if n >= 2 && pop.len() >= 2 {
            let mut order: Vec<usize> = (0..pop.len()).collect();
            order.shuffle(&mut rng);
            let pairs: Vec<(usize, usize, usize)> = order
                .chunks_exact(2)
                .map(|c| (c[0], c[1], rng.gen_range(1..n)))
                .collect();
            let kids: Vec<DesignVector> = pairs
                .iter()
                .flat_map(|&(i, j, cut)| {
                    let (a, b) = crossover(&pop[i].design, &pop[j].design, cut);
                    [a, b]
                })
                .collect();
            let (vals, e) = cache.evaluate(f, &kids);
            evals += e;
            let mut next: Vec<Option<Individual>> = pop.iter().cloned().map(Some).collect();
            for (p, &(i, j, _)) in pairs.iter().enumerate() {
                let mut family = vec![pop[i].clone(), pop[j].clone()];
                for c in 0..2 {
                    if let Some((fitness, gradient)) = vals[2 * p + c].clone() {
                        family.push(Individual {
                            design: kids[2 * p + c].clone(),
                            fitness,
                            gradient,
                            age: generation,
                        });
                    }
                }
                let mut best = sort_unique(family, cfg.dedup_tol).into_iter();
                next[i] = best.next();
                next[j] = best.next();
            }
            // (4) survivors, deduplicated, never refilled
            pop = sort_unique(next.into_iter().flatten().collect(), cfg.dedup_tol);
        }
        let g = record(generation, &pop, evals);
        observe(&g);
        trace.push(g);
    }
    if pop.len() <= 1 {
        stop = StopReason::PopulationCollapsed;
    }
    Ok(GaRun {
        trace,
        population: pop,
        stop,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `Σ w_k (1 − cos(2(α_k − t_k)))`, minimized at `α = t` (mod π).
    struct Bowl {
        target: Vec<f64>,
    }

    impl Fitness for Bowl {
        fn design_len(&self) -> usize {
            self.target.len()
        }
        fn fitness(&self, x: &DesignVector) -> Result<f64> {
            Ok(self.fitness_and_gradient(x)?.0)
        }
        fn fitness_and_gradient(&self, x: &DesignVector) -> Result<(f64, Vec<f64>)> {
            let mut f = 0.0;
            let mut g = Vec::new();
            for (k, (a, t)) in x.angles().iter().zip(&self.target).enumerate() {
                let w = 1.0 + k as f64;
                f += w * (1.0 - (2.0 * (a - t)).cos());
                g.push(2.0 * w * (2.0 * (a - t)).sin());
            }
            Ok((f, g))
        }
    }

    #[test]
    fn line_search_recovers_exact_parabola_vertex() {
        let mut count = 0;
        let ls = line_search(
            |g| {
                count += 1;
                Ok((g - 0.37).powi(2) + 1.0)
            },
            0.37f64.powi(2) + 1.0,
            0.25,
            5,
        )
        .unwrap();
        assert!((ls.step - 0.37).abs() < 1e-8);
        assert_eq!(ls.evaluations, 3);
        assert_eq!(count, 3);
    }

    #[test]
    fn line_search_never_ascends() {
        let mut count = 0;
        let ls = line_search(
            |g| {
                count += 1;
                Ok(1.0 + g)
            },
            1.0,
            0.1,
            5,
        )
        .unwrap();
        assert_eq!(ls.step, 0.0);
        assert_eq!(ls.fitness, 1.0);
        assert!(count <= 5);
    }

    #[test]
    fn line_search_respects_budget_on_concave_descent() {
        let mut count = 0;
        let ls = line_search(
            |g| {
                count += 1;
                Ok(-g * g)
            },
            0.0,
            0.1,
            5,
        )
        .unwrap();
        assert_eq!(count, 5);
        assert!(ls.step > 0.1 && ls.fitness < 0.0);
    }

    #[test]
    fn gd_converges_on_bowl_and_is_monotone() {
        let f = Bowl {
            target: vec![0.4, 2.0, 1.0],
        };
        let run = gd_run(&f, &DesignVector::new(vec![1.0, 1.5, 0.2]), &GdConfig::default());
        assert!(run.failure.is_none());
        assert!(run.trace.windows(2).all(|w| w[1].fitness <= w[0].fitness));
        assert!(run.best().unwrap().fitness < 1e-10);
    }

    #[test]
    fn gd_stops_immediately_at_stationary_point() {
        let f = Bowl { target: vec![0.4, 2.0] };
        let run = gd_run(&f, &DesignVector::new(vec![0.4, 2.0]), &GdConfig::default());
        assert_eq!(run.trace.len(), 1);
        assert_eq!(run.stop, StopReason::GradientTolerance);
    }

    #[test]
    fn mutation_is_unit_step_and_deterministic() {
        let f = Bowl { target: vec![0.4, 2.0] };
        let x = DesignVector::new(vec![1.0, 1.0]);
        let (fitness, gradient) = f.fitness_and_gradient(&x).unwrap();
        let ind = Individual {
            design: x.clone(),
            fitness,
            gradient,
            age: 0,
        };
        let c = mutation_step(&ind).unwrap();
        let d: f64 = c.angles().iter().zip(x.angles()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!((d - 1.0).abs() < 1e-12);
        assert_eq!(mutation_step(&ind), Some(c));
        let flat = Individual {
            gradient: vec![0.0, 0.0],
            ..ind
        };
        assert!(mutation_step(&flat).is_none());
    }

    #[test]
    fn crossover_swaps_suffixes() {
        let p1 = DesignVector::new(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let p2 = DesignVector::new(vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
        let (c1, c2) = crossover(&p1, &p2, 4);
        assert_eq!(c1.angles()[..4], p1.angles()[..4]);
        assert_eq!(c1.angles()[4..], p2.angles()[4..]);
        assert_eq!(c2.angles()[..4], p2.angles()[..4]);
        assert_eq!(c2.angles()[4..], p1.angles()[4..]);
        assert_eq!(crossover(&p1, &p1, 2), (p1.clone(), p1));
    }

    #[test]
    fn ga_single_individual_stops_at_generation_zero() {
        let f = Bowl { target: vec![0.4, 2.0] };
        let run = ga_run(&f, &[DesignVector::new(vec![1.0, 1.0])], &GaConfig::default(), 1).unwrap();
        assert_eq!(run.trace.len(), 1);
        assert_eq!(run.stop, StopReason::PopulationCollapsed);
    }

    #[test]
    fn ga_is_elitist_deterministic_and_shrinks() {
        let f = Bowl {
            target: vec![0.4, 2.0, 1.0, 2.5],
        };
        let cfg = GaConfig {
            population: 30,
            ..GaConfig::default()
        };
        let init = random_population(30, 4, &mut ChaCha8Rng::seed_from_u64(7));
        let a = ga_run(&f, &init, &cfg, 3).unwrap();
        let b = ga_run(&f, &init, &cfg, 3).unwrap();
        assert_eq!(a.trace, b.trace);
        assert!(a.trace.windows(2).all(|w| w[1].best.fitness <= w[0].best.fitness));
        assert!(a.trace.windows(2).all(|w| w[1].population <= w[0].population));
        for (i, x) in a.population.iter().enumerate() {
            for y in &a.population[i + 1..] {
                assert!(!x.design.layout_equivalent(&y.design, cfg.dedup_tol));
            }
        }
    }
}
