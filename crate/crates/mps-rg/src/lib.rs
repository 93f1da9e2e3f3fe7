//! Command-line front end for `mps-rg-core`: MPS JSON files, flow traces,
//! fixed-point reports and run manifests.

pub mod cli;
pub mod error;
pub mod format;
pub mod manifest;
pub mod report;

pub use cli::run;
