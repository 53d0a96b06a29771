//! Experiment harness: grid configuration, seeded runs, CSV summaries and
//! the invariant checks behind the `check` subcommand.

pub mod checks;
pub mod config;
pub mod experiment;
pub mod report;
