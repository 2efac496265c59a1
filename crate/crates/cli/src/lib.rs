//! Verification harness for the `msfrac` command-line tool: configuration,
//! the check registry, suite execution and report files.

pub mod checks;
pub mod commands;
pub mod config;
pub mod presets;
pub mod registry;
pub mod report;
pub mod suite;

pub use config::{parse_config, parse_config_str, ExperimentConfig, Overrides, Suite};
pub use report::emit_report;
pub use suite::{run_suite, CheckRecord, NamedRun, RunOptions, SuiteResult};
