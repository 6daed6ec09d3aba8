//! TOML run configuration.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::elasticity::{DatumRule, Deviator, InversionPolicy, SolverKind};
use crate::error::{Error, Result};
use crate::geometry::{lame_constants, DesignVector, LayoutPreset, LayoutSpec, MaterialParams, StressScenario};
use crate::mesh::MeshParams;
use crate::objectives::ObjectiveKind;
use crate::optimizer::{GaConfig, GdConfig};
use crate::problem::Problem;
use crate::shape_gradient::GradientForm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Gd,
    Ga,
    /// GA, then GD from the GA's best individual.
    GaThenGd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PresetName {
    #[default]
    Standard,
    Verification,
    /// Semi-axes given explicitly.
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutConfig {
    pub preset: PresetName,
    pub blocks: [usize; 2],
    pub cells_per_block: [usize; 2],
    /// Absolute semi-axes on the unit square; only for `preset = "custom"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub semi_major: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub semi_minor: Option<f64>,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        LayoutConfig {
            preset: PresetName::Standard,
            blocks: [3, 3],
            cells_per_block: [4, 4],
            semi_major: None,
            semi_minor: None,
        }
    }
}

impl LayoutConfig {
    pub fn spec(&self) -> LayoutSpec {
        let preset = match self.preset {
            PresetName::Verification => LayoutPreset::Verification,
            _ => LayoutPreset::Standard,
        };
        let mut spec = LayoutSpec::from_preset(preset, self.blocks, self.cells_per_block);
        if self.preset == PresetName::Custom {
            spec.semi_major = self.semi_major.unwrap_or(f64::NAN);
            spec.semi_minor = self.semi_minor.unwrap_or(f64::NAN);
        }
        spec
    }

    fn violations(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let custom = self.preset == PresetName::Custom;
        let given = self.semi_major.is_some() || self.semi_minor.is_some();
        if custom && (self.semi_major.is_none() || self.semi_minor.is_none()) {
            errs.push("layout: preset \"custom\" needs both semi_major and semi_minor".to_string());
        } else if !custom && given {
            errs.push("layout: semi_major/semi_minor are only allowed with preset \"custom\"".to_string());
        }
        if self.blocks.contains(&0) || self.cells_per_block.contains(&0) {
            errs.push("layout.blocks and layout.cells_per_block must be >= 1".to_string());
        } else if !custom || !given || (self.semi_major.is_some() && self.semi_minor.is_some()) {
            errs.extend(self.spec().violations());
        }
        errs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaterialConfig {
    pub young_modulus: f64,
    pub poisson_ratio: f64,
}

impl Default for MaterialConfig {
    fn default() -> Self {
        MaterialConfig {
            young_modulus: 50.0,
            poisson_ratio: 0.48,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveName {
    #[default]
    Compliance,
    VonMises,
    Area,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectiveConfig {
    pub kind: ObjectiveName,
    /// Exponent of the von Mises norm (default 5).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

impl ObjectiveConfig {
    pub fn kind(&self) -> ObjectiveKind {
        match self.kind {
            ObjectiveName::Compliance => ObjectiveKind::Compliance,
            ObjectiveName::VonMises => ObjectiveKind::VonMises {
                p: self.p.unwrap_or(ObjectiveKind::von_mises_default_p()),
            },
            ObjectiveName::Area => ObjectiveKind::Area,
        }
    }
}

/// Settings of the analytic-vs-FD gradient table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckConfig {
    pub designs: usize,
    pub delta: f64,
    /// Entries below `floor * max |fd|` are not compared.
    pub floor: f64,
    /// Largest accepted relative error.
    pub tolerance: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            designs: 10,
            delta: 1e-3,
            floor: 1e-3,
            tolerance: 0.02,
        }
    }
}

/// Everything a run needs. Unset keys take the defaults of the skin model:
/// E = 50, ν = 0.48, displacement 0.25, p = 5, M = 150, 3×3 blocks of 4×4 cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Required.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<StressScenario>,
    pub method: Method,
    /// Required whenever a random design is drawn.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Worker threads; unset uses every core.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parallel: Option<usize>,
    pub output: PathBuf,
    /// Starting design for GD, degrees; unset draws a random one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_degrees: Option<Vec<f64>>,
    /// Write `design_XXXX.csv` every this many iterations/generations (0: never).
    pub snapshot_every: usize,
    /// Fill the `wall_ms` column (makes the trace non-reproducible byte-wise).
    pub record_wall_time: bool,
    /// Also write a gnuplot script for the convergence trace.
    pub plot_script: bool,
    pub load_magnitude: f64,
    pub datum: DatumRule,
    pub deviator: Deviator,
    pub inversion: InversionPolicy,
    pub gradient_form: GradientForm,
    pub solver: SolverKind,
    pub layout: LayoutConfig,
    pub material: MaterialConfig,
    pub objective: ObjectiveConfig,
    pub mesh: MeshParams,
    pub gd: GdConfig,
    pub ga: GaConfig,
    pub check: CheckConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenario: None,
            method: Method::Gd,
            seed: None,
            parallel: None,
            output: PathBuf::from("graftopt-out"),
            initial_degrees: None,
            snapshot_every: 10,
            record_wall_time: false,
            plot_script: false,
            load_magnitude: 0.25,
            datum: DatumRule::Normal,
            deviator: Deviator::Corrected,
            inversion: InversionPolicy::Warn,
            gradient_form: GradientForm::Boundary,
            solver: SolverKind::Auto,
            layout: LayoutConfig::default(),
            material: MaterialConfig::default(),
            objective: ObjectiveConfig::default(),
            mesh: MeshParams::default(),
            gd: GdConfig::default(),
            ga: GaConfig::default(),
            check: CheckConfig::default(),
        }
    }
}

/// Parse and validate a TOML document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_with(text, |_| {})
}

/// As [`parse_config`], applying `overrides` (e.g. command-line flags)
/// before validation.
pub fn parse_config_with(text: &str, overrides: impl FnOnce(&mut RunConfig)) -> Result<RunConfig> {
    let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    overrides(&mut cfg);
    let errs = cfg.violations();
    if errs.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Validation(errs.into_iter().map(|m| locate(text, m)).collect()))
    }
}

pub fn load_config(path: &std::path::Path, overrides: impl FnOnce(&mut RunConfig)) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_with(&text, overrides)
}

/// Prefix a `table.key ...` message with the line that sets the key, if any.
fn locate(text: &str, msg: String) -> String {
    let path = msg.split([' ', ':']).next().unwrap_or("");
    let (table, key) = match path.rsplit_once('.') {
        Some((t, k)) => (t, k),
        None => ("", path),
    };
    let mut current = "";
    for (i, line) in text.lines().enumerate() {
        let l = line.trim();
        if let Some(h) = l.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            current = h.trim();
        } else if current == table
            && l.strip_prefix(key).is_some_and(|r| r.trim_start().starts_with('='))
            && !key.is_empty()
        {
            return format!("line {}: {msg}", i + 1);
        }
    }
    msg
}

impl RunConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    /// Every violated invariant, one message each.
    pub fn violations(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.scenario.is_none() {
            errs.push("scenario is required (\"uniaxial\" or \"biaxial\")".to_string());
        }
        let random_start = self.method != Method::Gd || self.initial_degrees.is_none();
        if random_start && self.seed.is_none() {
            errs.push("seed is required for GA runs and for GD without initial_degrees".to_string());
        }
        if self.parallel == Some(0) {
            errs.push("parallel = 0 must be >= 1".to_string());
        }
        if !(self.load_magnitude.is_finite() && self.load_magnitude >= 0.0) {
            errs.push(format!("load_magnitude = {} must be >= 0", self.load_magnitude));
        }
        if let Err(Error::ParameterOutOfRange { name, reason }) =
            lame_constants(self.material.young_modulus, self.material.poisson_ratio)
        {
            errs.push(format!("material.{name}: {reason}"));
        }
        errs.extend(self.layout.violations());
        if let Some(d) = &self.initial_degrees {
            let n = self.layout.cells_per_block[0] * self.layout.cells_per_block[1];
            if d.len() != n {
                errs.push(format!("initial_degrees has {} entries, the layout needs {n}", d.len()));
            }
            if d.iter().any(|a| !a.is_finite()) {
                errs.push("initial_degrees must be finite".to_string());
            }
        }
        if self.objective.p.is_some() && self.objective.kind != ObjectiveName::VonMises {
            errs.push("objective.p is only used with kind = \"von_mises\"".to_string());
        }
        if let Err(Error::ParameterOutOfRange { reason, .. }) = self.objective.kind().validate() {
            errs.push(format!("objective.p: {reason}"));
        }
        errs.extend(self.mesh.violations());
        errs.extend(self.gd.violations());
        errs.extend(self.ga.violations());
        if self.check.designs == 0 {
            errs.push("check.designs must be >= 1".to_string());
        }
        if !(1e-4..=1e-2).contains(&self.check.delta) {
            errs.push(format!("check.delta = {} must lie in [1e-4, 1e-2]", self.check.delta));
        }
        errs
    }

    pub fn validate(&self) -> Result<()> {
        let errs = self.violations();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }

    /// The evaluation problem described by this config.
    pub fn problem(&self) -> Result<Problem> {
        self.validate()?;
        let scenario = self.scenario.expect("validated");
        let mut p = Problem::new(self.layout.spec(), scenario, self.objective.kind());
        p.material = MaterialParams::new(self.material.young_modulus, self.material.poisson_ratio)?;
        p.load_magnitude = self.load_magnitude;
        p.datum = self.datum;
        p.deviator = self.deviator;
        p.inversion = self.inversion;
        p.gradient_form = self.gradient_form;
        p.mesh = self.mesh;
        p.solver = self.solver;
        Ok(p)
    }

    /// The configured starting design, if any.
    pub fn initial_design(&self) -> Option<DesignVector> {
        self.initial_degrees
            .as_ref()
            .map(|d| DesignVector::new(d.iter().map(|a| a.to_radians()).collect::<Vec<_>>()))
    }
}
