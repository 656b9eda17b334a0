//! Command-line companion to `groupcast-core`: file formats, experiment
//! orchestration, and the `groupcast` binary's command implementations.

pub mod commands;
pub mod experiment;
pub mod formats;
