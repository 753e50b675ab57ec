//! Command-line front end for `tinv-core`: spec parsing, subcommands,
//! named reproduction recipes and CSV output.

pub mod args;
pub mod commands;
pub mod error;
pub mod output;
pub mod recipes;
pub mod specs;

pub use args::{Cli, Command, Recipe};
pub use commands::{execute, Context};
pub use error::{CliError, CliResult};
