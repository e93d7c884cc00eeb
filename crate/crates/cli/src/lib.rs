//! Command-line front end: each subcommand loads an [`ExperimentConfig`],
//! runs one experiment and writes its JSON/CSV artefacts to `output_dir`.

pub mod commands;
pub mod config;

pub use commands::{execute, Cli, Command, Output};
pub use config::ExperimentConfig;
