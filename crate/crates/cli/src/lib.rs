//! Experiment harness for `logdet-ftrl`: configuration, the round loop with
//! CSV output, sweeps, lemma verification and offline optima.
//!
//! Every command is deterministic in its arguments. Replicates and sweep
//! cells run in parallel, each with its own engine and adversary.

pub mod commands;
pub mod config;
pub mod error;
pub mod run;
pub mod sweep;

pub use commands::{cmd_opt, cmd_verify, OptReport, Suite, VerifyOptions};
pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
pub use run::{cmd_run, simulate, RunSummary};
pub use sweep::{cmd_sweep, SweepRow};
