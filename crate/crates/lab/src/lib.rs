//! File formats, configuration and run orchestration for `lqg-heat`.
//!
//! The `lqg` binary exposes four stages: `sample-field`, `run-heat`,
//! `analyze` and `sweep`. Each reads a flat JSON [`RunConfig`] whose keys
//! can be overridden by flags, and echoes the effective configuration into
//! its output directory.

pub mod config;
pub mod error;
pub mod gridfile;
pub mod pipeline;
pub mod sweep;

pub use config::{CutAxis, RunConfig, StartMode};
pub use error::LabError;
pub use gridfile::{read_grid, write_grid};
pub use pipeline::{
    cmd_analyze, cmd_run_heat, cmd_sample_field, cmd_sample_fields, FieldMeta, Report,
    TrajectoryMeta,
};
pub use sweep::{cmd_sweep, SweepAxes, SweepOutcome, SweepRow};
