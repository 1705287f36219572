//! Configuration files, run orchestration, results storage and the `tedopa`
//! command-line interface on top of `tedopa-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod model;
pub mod runner;
pub mod store;

pub use config::{load_config, save_config, SimulationConfig, MODEL_CATALOG};
pub use error::{CliError, Result};
pub use runner::{run, ConvergenceReport, RunOutcome};
pub use store::{export, Manifest, Series};
