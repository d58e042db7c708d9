//! Command line front end for `tfreg-core`: configuration, commands and the
//! acceptance suite. The `tfreg` binary is a thin wrapper over this crate.

pub mod app;
pub mod commands;
pub mod config;
pub mod error;
pub mod selftest;
pub mod table;

pub use config::RunConfig;
pub use error::{CliError, CliResult};
pub use table::{Cell, Provenance, ResultTable};
