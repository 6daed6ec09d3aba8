//! One design evaluation: mesh, state solve, objective, adjoint and gradient.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elasticity::{DatumRule, Deviator, ElasticSystem, FeSpace, InversionPolicy, SolverKind};
use crate::error::{Error, Result};
use crate::geometry::{DesignVector, LayoutSpec, MaterialParams, StressScenario};
use crate::mesh::{generate, Mesh, MeshParams};
use crate::objectives::{self, ObjectiveKind};
use crate::shape_gradient::{self, GradientForm, MorphMap};

/// Everything needed to turn a design vector into an objective value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub layout: LayoutSpec,
    pub material: MaterialParams,
    pub scenario: StressScenario,
    /// Magnitude of the prescribed normal displacement on clamped sides.
    pub load_magnitude: f64,
    pub datum: DatumRule,
    pub objective: ObjectiveKind,
    pub deviator: Deviator,
    pub inversion: InversionPolicy,
    pub gradient_form: GradientForm,
    pub mesh: MeshParams,
    pub solver: SolverKind,
}

/// Objective value (in its natural sense) and, optionally, its gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    /// Gradient of `value` with respect to the design angles.
    pub gradient: Option<Vec<f64>>,
}

impl Evaluation {
    /// Fitness (smaller is better) for the given objective.
    pub fn fitness(&self, kind: ObjectiveKind) -> f64 {
        kind.fitness(self.value)
    }

    /// Gradient of the fitness.
    pub fn fitness_gradient(&self, kind: ObjectiveKind) -> Option<Vec<f64>> {
        let s = if kind.maximize() { -1.0 } else { 1.0 };
        self.gradient.as_ref().map(|g| g.iter().map(|v| s * v).collect())
    }
}

/// Analytic and finite-difference gradients at one design.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientCheck {
    pub value: f64,
    pub analytic: Vec<f64>,
    pub finite_difference: Vec<f64>,
}

impl GradientCheck {
    /// Largest relative error over entries whose FD magnitude is at least
    /// `floor` times the largest FD entry, and whether all such signs agree.
    pub fn compare(&self, floor: f64) -> (f64, bool) {
        let scale = self.finite_difference.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut worst: f64 = 0.0;
        let mut signs = true;
        for (a, f) in self.analytic.iter().zip(&self.finite_difference) {
            if f.abs() < floor * scale || scale == 0.0 {
                continue;
            }
            worst = worst.max((a - f).abs() / f.abs());
            signs &= a.signum() == f.signum();
        }
        (worst, signs)
    }
}

impl Problem {
    pub fn new(layout: LayoutSpec, scenario: StressScenario, objective: ObjectiveKind) -> Self {
        Problem {
            layout,
            material: MaterialParams::skin(),
            scenario,
            load_magnitude: 0.25,
            datum: DatumRule::Normal,
            objective,
            deviator: Deviator::Corrected,
            inversion: InversionPolicy::Warn,
            gradient_form: GradientForm::Boundary,
            mesh: MeshParams::default(),
            solver: SolverKind::Auto,
        }
    }

    pub fn design_len(&self) -> usize {
        self.layout.design_len()
    }

    pub fn build_mesh(&self, design: &DesignVector) -> Result<Mesh> {
        generate(&self.layout, design, &self.mesh)
    }

    /// Assemble and factorize the state problem on a mesh.
    pub fn system(&self, mesh: Mesh) -> Result<ElasticSystem> {
        let space = FeSpace::new(mesh)?;
        ElasticSystem::for_scenario(space, self.material, self.scenario, self.load_magnitude, self.datum, self.solver)
    }

    pub fn evaluate(&self, design: &DesignVector, with_gradient: bool) -> Result<Evaluation> {
        if design.len() != self.design_len() {
            return Err(Error::LengthMismatch {
                expected: self.design_len(),
                got: design.len(),
            });
        }
        let mesh = self.build_mesh(design)?;
        self.evaluate_on_mesh(mesh, with_gradient)
    }

    /// Evaluate on a given mesh (for example a morphed one).
    pub fn evaluate_on_mesh(&self, mesh: Mesh, with_gradient: bool) -> Result<Evaluation> {
        let sys = self.system(mesh)?;
        let u = sys.solve_state(None)?;
        let n = self.design_len();
        let volume = self.gradient_form == GradientForm::Volume;
        let layout = &self.layout;
        Ok(match self.objective {
            ObjectiveKind::Compliance => Evaluation {
                value: objectives::compliance(&sys, &u),
                gradient: match (with_gradient, volume) {
                    (false, _) => None,
                    (true, false) => Some(shape_gradient::grad_compliance(&sys, &u, n)),
                    (true, true) => Some(shape_gradient::volume_grad_compliance(&sys, layout, &u, n)?),
                },
            },
            ObjectiveKind::VonMises { p } => {
                let j = objectives::vonmises_power(&sys, &u, p, self.deviator);
                let gradient = if with_gradient {
                    let p_adj = sys.solve_adjoint_vm(&u, p, self.deviator)?;
                    Some(if volume {
                        shape_gradient::volume_grad_vonmises(&sys, layout, &u, &p_adj, p, self.deviator, j, n)?
                    } else {
                        shape_gradient::grad_vonmises(&sys, &u, &p_adj, p, self.deviator, j, n)
                    })
                } else {
                    None
                };
                Evaluation {
                    value: j.powf(1.0 / p),
                    gradient,
                }
            }
            ObjectiveKind::Area => {
                let gradient = if with_gradient {
                    let q_adj = sys.solve_adjoint_area(&u, self.inversion)?;
                    Some(if volume {
                        shape_gradient::volume_grad_area(&sys, layout, &u, &q_adj, n)?
                    } else {
                        shape_gradient::grad_area(&sys, &u, &q_adj, n)
                    })
                } else {
                    None
                };
                Evaluation {
                    value: objectives::deformed_area(&sys, &u),
                    gradient,
                }
            }
        })
    }

    /// Central differences of the objective along each design angle,
    /// obtained by morphing one mesh (no remeshing).
    pub fn fd_gradient_on_mesh(&self, mesh: &Mesh, delta: f64) -> Result<Vec<f64>> {
        if !(1e-4..=1e-2).contains(&delta) {
            return Err(Error::ParameterOutOfRange {
                name: "delta",
                reason: format!("finite-difference step {delta} must lie in [1e-4, 1e-2]"),
            });
        }
        let n = self.design_len();
        let maps = (0..n)
            .flat_map(|k| [(k, delta), (k, -delta)])
            .map(|(k, d)| MorphMap::new(&self.layout, mesh, k, d))
            .collect::<Result<Vec<_>>>()?;
        let values = maps
            .par_iter()
            .map(|m| Ok(self.evaluate_on_mesh(m.morph(mesh)?, false)?.value))
            .collect::<Result<Vec<f64>>>()?;
        Ok((0..n).map(|k| (values[2 * k] - values[2 * k + 1]) / (2.0 * delta)).collect())
    }

    pub fn fd_gradient(&self, design: &DesignVector, delta: f64) -> Result<Vec<f64>> {
        let mesh = self.build_mesh(design)?;
        self.fd_gradient_on_mesh(&mesh, delta)
    }

    /// Analytic and FD gradients on the same mesh.
    pub fn check_gradient(&self, design: &DesignVector, delta: f64) -> Result<GradientCheck> {
        let mesh = self.build_mesh(design)?;
        let fd = self.fd_gradient_on_mesh(&mesh, delta)?;
        let ev = self.evaluate_on_mesh(mesh, true)?;
        Ok(GradientCheck {
            value: ev.value,
            analytic: ev.gradient.expect("gradient requested"),
            finite_difference: fd,
        })
    }
}
