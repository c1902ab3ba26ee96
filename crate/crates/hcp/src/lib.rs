//! Data ingestion, experiment harness, invariant suite and command-line
//! front end around [`hcp_core`].

pub mod bench;
pub mod cli;
pub mod data;
pub mod validate;

pub use hcp_core as core;
