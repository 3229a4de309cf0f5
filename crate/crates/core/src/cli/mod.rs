//! Scenario runner: JSON configs in, JSON reports and CSV traces out.

pub mod config;
pub mod registry;
pub mod report;
pub mod runner;
pub mod tasks;

pub use config::{ConfigError, ScenarioConfig};
pub use registry::{format_listing, list_builtins, Entry};
pub use report::{Report, SCHEMA_VERSION};
pub use runner::{run_config, run_scenario, RunError, RunOptions};
pub use tasks::Task;
