//! Run configuration, orchestration and file formats.

pub mod config;
pub mod output;
pub mod run;

pub use config::{load_config, parse_config, parse_config_with, CheckConfig, LayoutConfig, MaterialConfig, Method, ObjectiveConfig, ObjectiveName, PresetName, RunConfig};
pub use output::{export_fields, FieldSample, TraceRow, CONVERGENCE_HEADER};
pub use run::{check_gradients, export_mesh, run, RunSummary};
