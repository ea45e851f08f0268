//! Run orchestration for the annealing simulator: structured
//! configuration, single anneals, parameter sweeps, and plot-ready CSV
//! artifacts. The physics lives in `anneal-core`; this crate only decides
//! what to run, in what order, and where the results go.

pub mod config;
pub mod emit;
pub mod runner;

pub use config::{Mode, RunConfig};
pub use emit::{persist_record, persist_sweep, read_sweep_csv, FitFooter};
pub use runner::{run_anneal, run_sweep, RunRecord, SweepAxis, SweepOutcome};
