//! File formats, configuration and experiment drivers behind the `dcs`
//! command-line tool.

pub mod cli;
pub mod commands;
pub mod config;
pub mod experiments;
pub mod io;
pub mod manifest;
pub mod slopes;
