//! Scenario runner behind the `phasetunnel` binary.

pub mod commands;
pub mod config;
pub mod suite;
