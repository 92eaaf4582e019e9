//! Scenario runner library behind the `sflab` binary; exposed so the
//! acceptance suite can drive scenarios in-process.

pub mod config;
pub mod output;
pub mod scenarios;
