//! Command-line front end: configuration parsing, verification suites,
//! renderers and exporters.

pub mod commands;
pub mod config;
pub mod error;
pub mod render;

pub use error::CliError;
