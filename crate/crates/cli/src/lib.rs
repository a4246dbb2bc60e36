//! Command-line front end: file formats and subcommands.

pub mod commands;
pub mod error;
pub mod phantom_file;
pub mod rdk;

pub use commands::{run, Cli};
pub use error::CliError;
