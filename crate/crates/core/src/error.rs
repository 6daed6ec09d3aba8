use std::path::PathBuf;

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter `{name}` out of range: {reason}")]
    ParameterOutOfRange { name: &'static str, reason: String },

    #[error("length mismatch: expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("no cutoff ball fits around cut {instance}: inner radius {inner:.6} >= outer radius {outer:.6}")]
    NoCutoff {
        instance: usize,
        inner: f64,
        outer: f64,
    },

    #[error("meshing failed: {0}")]
    Meshing(String),

    #[error("mesh quality below {min_angle_deg} degrees after {attempts} refinement attempts")]
    MeshQuality { min_angle_deg: f64, attempts: usize },

    #[error("edge ({0}, {1}) is not a boundary edge")]
    NotBoundaryEdge(usize, usize),

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("linear solver failed: {0}")]
    Solver(String),

    #[error("inverted element: det(I + grad u) = {det:.3e} at ({x:.6}, {y:.6})")]
    InvertedElement { det: f64, x: f64, y: f64 },

    #[error("point ({0:.6}, {1:.6}) is not inside any triangle")]
    PointNotFound(f64, f64),

    #[error("morph produced a tangled element (triangle {triangle}, signed area {area:.3e})")]
    TangledMorph { triangle: usize, area: f64 },

    #[error("objective evaluation failed at design {design:?}: {source}")]
    Evaluation {
        design: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("all {0} evaluations of the population failed")]
    PopulationExhausted(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error("invalid config:\n{}", .0.join("\n"))]
    Validation(Vec<String>),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 2 validation, 3 solver, 4 meshing, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ParameterOutOfRange { .. }
            | Error::LengthMismatch { .. }
            | Error::Config(_)
            | Error::Validation(_)
            | Error::NoCutoff { .. } => 2,
            Error::SingularSystem(_)
            | Error::Solver(_)
            | Error::InvertedElement { .. }
            | Error::PointNotFound(..)
            | Error::TangledMorph { .. }
            | Error::PopulationExhausted(_) => 3,
            Error::DegenerateGeometry(_)
            | Error::Meshing(_)
            | Error::MeshQuality { .. }
            | Error::NotBoundaryEdge(..) => 4,
            Error::Evaluation { source, .. } => source.exit_code(),
            Error::Io { .. } => 1,
        }
    }
}
