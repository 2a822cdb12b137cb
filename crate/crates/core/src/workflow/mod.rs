//! The sequential sensitivity-analysis loop: evaluate, fit, extract indices,
//! check the stopping criterion, and propose the next batch.

mod config;
mod output;
mod run;
mod simulator;

pub use config::{CriterionKind, FoldStrategy, RunConfig, SimulatorSpec, StoppingConfig};
pub use output::{read_design_csv, write_design_csv, OutputFiles};
pub use run::{run, run_with, RunOutcome, StopReason};
pub use simulator::{BuiltinSimulator, ExternalSimulator, Simulator};
