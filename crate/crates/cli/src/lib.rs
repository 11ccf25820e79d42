//! Library half of the `ergopt` command-line tool: system files, reports and
//! the subcommands themselves, kept here so tests can drive them directly.

pub mod commands;
pub mod input;

pub use input::{parse_system_file, parse_system_str, RunOptions, SpecError, SystemSpec};
