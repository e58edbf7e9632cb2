//! Configuration, pipeline and reports for the `bridgetail` command.

pub mod config;
pub mod error;
pub mod pipeline;
pub mod report;

pub use config::RunConfig;
pub use error::CliError;
pub use pipeline::{run, Command};
pub use report::Report;
