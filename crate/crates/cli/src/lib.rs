//! Command-line front end for `lmg-gmc`: ground-state records, field
//! sweeps, correlation spectra, finite-size-scaling reports and the
//! full-space oracle check, with an on-disk ground-state cache.

pub mod cache;
pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod parse;
pub mod plot;
pub mod report;
pub mod table;

pub use cli::Cli;
pub use commands::run;
pub use error::{CliError, Result};
