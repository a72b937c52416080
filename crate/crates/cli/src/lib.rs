//! Library behind the `setcalc` binary: the function catalog, algebra
//! expressions, run configuration, subcommands and the property-suite runner.

pub mod catalog;
pub mod commands;
pub mod config;
pub mod error;
pub mod expr;
pub mod verify;

pub use catalog::{catalog, Entry, EntryInfo};
pub use config::{Format, GridSpec, Overrides, RunConfig};
pub use error::{CliError, Result};
pub use expr::Expr;
