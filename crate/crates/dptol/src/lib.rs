//! Command line, simulation harness and file formats for Dirichlet-process
//! tolerance intervals. The numerics live in `dptol-core`.

pub mod cli;
pub mod config;
pub mod dataset;
pub mod dist_spec;
pub mod harness;
pub mod input;
pub mod manifest;
pub mod method;
pub mod potency;
pub mod report;
pub mod table;

pub use dptol_core as core;
