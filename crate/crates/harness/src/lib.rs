//! Config-driven experiment harness: CLI orchestration, CSV persistence and run manifests.

pub mod commands;
pub mod config;
pub mod error;
pub mod experiments;
pub mod manifest;
pub mod schema;

pub use commands::run_command;
pub use config::{Config, ConfigBuilder};
pub use error::{HarnessError, Result};
pub use manifest::RunManifest;
