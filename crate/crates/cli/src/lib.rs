//! Command-line front end for the `entroflux` simulator.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod selftest;

pub use config::{Overrides, ResolvedRun, RunConfig};
pub use error::CliError;
