//! Batch front end: TOML analysis configs, CSV ingestion, the analysis
//! subcommands, JSON reports and SVG plots.

pub mod commands;
pub mod config;
pub mod error;
pub mod ingest;
pub mod report;
pub mod svg;

pub use commands::{run, simulate_to, Command, RunOptions};
pub use config::{AnalysisConfig, LoadedConfig};
pub use error::{CliError, CliResult};
pub use report::{Report, REPORT_VERSION};
