//! Experiment driver: configuration, single and batch runs, latency
//! benchmark, and output files.

pub mod batch;
pub mod bench;
pub mod config;
pub mod output;
pub mod run;

pub use batch::{run_batch, run_batch_with, BatchResult, Execution, MseRow};
pub use bench::{latency_bench, LatencyStats};
pub use config::{ExperimentConfig, Method, Setup, UpdateRule};
pub use run::{run_single, IterationRecord, Trajectory};
