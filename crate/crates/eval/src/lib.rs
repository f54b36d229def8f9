//! Evaluation harness: replication runs over a test set, sequential
//! convergence of mean accuracy, few-shot and temperature sweeps, and
//! report files.

mod config;
mod harness;
mod report;

pub use config::{PromptStyle, RunConfig, ValidationMode, DEFAULT_FEW_SHOT_COUNTS, DEFAULT_TEMPERATURES};
pub use harness::{ConvergenceOutcome, Harness, ReplicationResult, SampleRecord, SweepKind, SweepOutput, SweepRow};
pub use report::{emit_report, ReportFiles};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("dataset: {0}")]
    Dataset(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}
