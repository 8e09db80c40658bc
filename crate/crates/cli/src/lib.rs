//! Command-line layer over `mcss-core`: CSV ingestion, transforms and the
//! subcommands of the `mcss` binary.

pub mod commands;
pub mod dataset;
pub mod output;
