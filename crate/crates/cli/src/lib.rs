//! Scenario-driven pipeline around the `urbanflow` library: configuration,
//! phase orchestration and file output.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{Geometry, Pipeline, RomPhase};
pub use config::ScenarioConfig;
pub use error::{exit, CliError};
