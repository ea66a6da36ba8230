//! Command-line front end: configuration, ingestion of external series and
//! reproducible output directories.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod help;
pub mod io;

pub use commands::{execute, verify, Verification};
pub use config::{Command, RunConfig};
pub use error::{CliError, CliResult};
pub use io::Manifest;
