//! Building blocks of the `homret` binary: the flat key=value configuration
//! format, scenario materialization, run records, and the subcommand bodies.
//!
//! The binary itself only adds argument parsing on top; everything testable
//! lives here so integration tests can drive the same code paths the CLI
//! uses.

pub mod commands;
pub mod config;
pub mod error;
pub mod record;
pub mod scenario;
