//! Command-line pipeline around `ddrom_core`.

pub mod config;
pub mod pipeline;
pub mod memory;
pub mod commands;
