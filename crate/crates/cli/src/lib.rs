//! Command-line front end for the `gauss-holder` verifiers.
//!
//! Configs are parsed in [`config`], dispatched in [`run`] and written out as
//! [`report::Report`] documents.

pub mod config;
pub mod functions;
pub mod region;
pub mod report;
pub mod run;
pub mod sweep;
