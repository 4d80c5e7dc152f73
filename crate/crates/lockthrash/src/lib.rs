//! File formats, sweeps, reports and figure data for `lockthrash-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod files;
pub mod inputs;
pub mod policy_arg;
pub mod report;
pub mod repro;
pub mod sweep;

pub use error::CliError;
pub use files::ExperimentConfig;
pub use report::{Format, RunRecord};
pub use sweep::{sweep, ExperimentPlan, SweepTable};
