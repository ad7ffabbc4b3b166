//! Experiment harness and file formats around `ddseq-core`.

pub mod config;
pub mod harness;
pub mod mmio;
pub mod output;

pub use config::{ConfigError, ExperimentConfig};
pub use harness::{
    run_experiment, summarize, ExperimentOutput, HarnessError, StepRecord, SummaryRow,
};
