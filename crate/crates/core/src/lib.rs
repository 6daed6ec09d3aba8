//! Orientation optimization of elliptical cuts in a stretched linear-elastic patch.

pub mod elasticity;
pub mod error;
pub mod geometry;
pub mod io;
pub mod mesh;
pub mod objectives;
pub mod optimizer;
pub mod problem;
pub mod shape_gradient;
pub mod verification;

pub use error::{Error, Result};
pub use objectives::ObjectiveKind;
pub use problem::{Evaluation, GradientCheck, Problem};
pub use geometry::{
    lame_constants, CutInstance, DesignVector, LayoutPreset, LayoutSpec, MaterialParams, Side, StressScenario,
};
