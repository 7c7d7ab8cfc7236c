//! Command-line front end for the backflow toolkit.

pub mod config;
pub mod error;
pub mod report;
pub mod runner;

pub use config::RunConfig;
pub use error::CliError;
pub use report::RunReport;
