//! Compliance, von Mises L^p norm and deformed area of a solved state.

use serde::{Deserialize, Serialize};

use crate::elasticity::quadrature::TRI6;
use crate::elasticity::{ddot, det_i_plus, stress_eval, sym, Deviator, ElasticSystem};
use crate::error::{Error, Result};

/// Which functional to optimize.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveKind {
    /// `∫ σ(u):ε(u)`, minimized.
    Compliance,
    /// `(∫ (σ_d:σ_d)^{p/2})^{1/p}`, minimized.
    VonMises {
        #[serde(default = "default_p")]
        p: f64,
    },
    /// `∫ det(I + ∇u)`, maximized.
    Area,
}

fn default_p() -> f64 {
    5.0
}

impl ObjectiveKind {
    pub fn von_mises_default_p() -> f64 {
        default_p()
    }

    pub fn von_mises() -> Self {
        ObjectiveKind::VonMises { p: default_p() }
    }

    /// True for functionals that are maximized.
    pub fn maximize(self) -> bool {
        matches!(self, ObjectiveKind::Area)
    }

    /// Fitness used by the optimizers (smaller is better).
    pub fn fitness(self, value: f64) -> f64 {
        if self.maximize() {
            -value
        } else {
            value
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ObjectiveKind::Compliance => "compliance",
            ObjectiveKind::VonMises { .. } => "von_mises",
            ObjectiveKind::Area => "area",
        }
    }

    pub fn validate(self) -> Result<()> {
        if let ObjectiveKind::VonMises { p } = self {
            if !(p >= 2.0 && p.is_finite()) {
                return Err(Error::ParameterOutOfRange {
                    name: "p",
                    reason: format!("von Mises exponent {p} must be >= 2"),
                });
            }
        }
        Ok(())
    }
}

/// `∫ σ(u) : ε(u)`.
pub fn compliance(sys: &ElasticSystem, u: &[f64]) -> f64 {
    integrate(sys, u, |g| {
        let e = sym(g);
        ddot(&sys.material.stress(e), &e)
    })
}

/// `∫ (σ_d : σ_d)^{p/2}`, the p-th power of the von Mises norm.
pub fn vonmises_power(sys: &ElasticSystem, u: &[f64], p: f64, deviator: Deviator) -> f64 {
    integrate(sys, u, |g| {
        let st = stress_eval(&sys.material, deviator, g);
        ddot(&st.deviator, &st.deviator).powf(0.5 * p)
    })
}

/// `(∫ (σ_d : σ_d)^{p/2})^{1/p}`.
pub fn vonmises_lp(sys: &ElasticSystem, u: &[f64], p: f64, deviator: Deviator) -> f64 {
    vonmises_power(sys, u, p, deviator).powf(1.0 / p)
}

/// `∫ det(I + ∇u)`; warns when the deformation inverts somewhere.
pub fn deformed_area(sys: &ElasticSystem, u: &[f64]) -> f64 {
    let mut inverted = 0usize;
    let a = integrate(sys, u, |g| {
        let d = det_i_plus(g);
        if d <= 0.0 {
            inverted += 1;
        }
        d
    });
    if inverted > 0 {
        log::warn!("deformed area: det(I + grad u) <= 0 at {inverted} quadrature points");
    }
    a
}

/// Undeformed area of the meshed domain.
pub fn domain_area(sys: &ElasticSystem) -> f64 {
    sys.space.geometry.iter().map(|g| g.area).sum()
}

/// Degree-4 quadrature of a pointwise function of `∇u`.
pub fn integrate(sys: &ElasticSystem, u: &[f64], mut f: impl FnMut(&[[f64; 2]; 2]) -> f64) -> f64 {
    let sp = &sys.space;
    let mut total = 0.0;
    for e in 0..sp.num_elements() {
        let mut acc = 0.0;
        for (l, w) in TRI6 {
            acc += w * f(&sp.grad(u, e, l));
        }
        total += acc * sp.geometry[e].area;
    }
    total
}

/// Objective value for `kind`.
pub fn evaluate(kind: ObjectiveKind, sys: &ElasticSystem, u: &[f64], deviator: Deviator) -> f64 {
    match kind {
        ObjectiveKind::Compliance => compliance(sys, u),
        ObjectiveKind::VonMises { p } => vonmises_lp(sys, u, p, deviator),
        ObjectiveKind::Area => deformed_area(sys, u),
    }
}
