//! Benchmark harness and command-line interface for the `spreadnuts-core`
//! samplers: seeded trial running, JSON/CSV report emission, mixture
//! specification files, and the named benchmark targets.

pub mod cli;
pub mod output;
pub mod report;
pub mod targets;
pub mod trial;

pub use report::{MixtureDescriptor, TrialReport, REPORT_SCHEMA_VERSION};
pub use trial::{run_trial, two_island_experiment, SamplerKind, TrialSettings};
