//! Configuration, experiment recipes, artifact manifest and the stage
//! driver behind the `invariant-atlas` command line tool.

pub mod config;
pub mod manifest;
pub mod stages;
