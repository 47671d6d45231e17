//! Frontend for the `bcst` binary: spec documents, amplitude files and subcommands.

pub mod amplitudes;
pub mod args;
pub mod commands;
pub mod document;

pub use args::Cli;
pub use commands::{exit, run, CliError};
