//! Command-line front end: system files and the five commands.

pub mod commands;
pub mod system;
