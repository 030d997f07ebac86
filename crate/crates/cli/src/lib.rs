//! Driver for the analysis pipeline: instrument, slice and translate,
//! create, separate, simplify, then tabulate and check against the oracle.

pub mod config;
pub mod pipeline;

pub use config::{Command, JobConfig, Mode, Sweep};
pub use pipeline::{compare_files, load, run_pipeline, Artifacts, CliError};
