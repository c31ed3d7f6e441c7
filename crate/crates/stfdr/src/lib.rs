//! Simulation harness, verification batteries, file formats and command
//! execution on top of [`stfdr_core`].
//!
//! * [`simulate`]: sample generation (independent or equicorrelated nulls)
//!   and the seeded, parallel Monte Carlo runner.
//! * [`stp`]: perturbation proxy for the stopping-time property.
//! * [`battery`]: randomized invariant batteries behind `stfdr check`.
//! * [`io`]: p-value input files and CSV projections.
//! * [`commands`]: run manifests and report rendering for every subcommand.

pub mod battery;
pub mod commands;
mod error;
pub mod io;
pub mod simulate;
pub mod stp;

pub use error::{Error, Result};
pub use stfdr_core as core;
