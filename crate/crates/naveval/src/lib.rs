//! File formats, data lookup and subcommands behind the `naveval` binary.

pub mod commands;
pub mod data;
pub mod error;
pub mod formats;

pub use error::{CliError, Result};
