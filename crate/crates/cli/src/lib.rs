//! Configuration, dispatch and the acceptance suite behind the `bvdisp` command.

pub mod acceptance;
pub mod config;
pub mod jobs;

pub use config::ExperimentConfig;
pub use jobs::{error_record, run, RunOutput};
