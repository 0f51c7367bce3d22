//! Command-line pipeline: price CSV → moment estimates → λ sweep → CSV, JSON
//! and SVG artifacts, plus the orthant multiplicity baseline.

pub mod artifacts;
mod commands;
pub mod svg;

pub use commands::{execute, figures, load_input, run, BaselineArgs, Cli, CliError, Command, Instance, SweepArgs};
