//! Configuration and subcommand drivers behind the `subdiff` binary.

pub mod commands;
pub mod config;
pub mod failure;
