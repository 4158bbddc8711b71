//! Task-graph orchestration over asynchronous local backends.
//!
//! [`JobEngine`] runs circuits on background threads behind blocking
//! [`JobHandle`]s; [`execute`] runs a [`TaskGraph`] with bounded
//! parallelism; [`pipelines`] assembles the Grover, Shor and TSP graphs.

mod backend;
mod engine;
mod graph;
pub mod pipelines;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::CircuitError;
use crate::grover::GroverError;
use crate::shor::ShorError;
use crate::sim::Histogram;
use crate::tsp::TspError;

pub use backend::{BackendKind, BackendSpec};
pub use engine::{JobEngine, JobHandle, JobStatus};
pub use graph::{
    execute, Task, TaskFn, TaskGraph, TaskInputs, TaskOutput, TaskTiming, WorkflowResult, RESULT_FORMAT_VERSION,
};
pub use pipelines::{build_workflow, run_workflow, WorkflowConfig};

#[derive(Debug, Error)]
pub enum WorkflowError {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("invalid backend: {0}")]
    Backend(String),
    #[error("shot count must be positive")]
    ZeroShots,
    #[error("job {job} failed: {cause}")]
    JobFailed { job: u64, cause: String },
    #[error("duplicate task id '{0}'")]
    DuplicateTask(String),
    #[error("task '{task}' depends on unknown task '{dep}'")]
    MissingDependency { task: String, dep: String },
    #[error("dependency cycle through {}", .0.join(", "))]
    Cycle(Vec<String>),
    #[error("max_parallel must be at least 1")]
    MaxParallel,
    #[error("at least one backend is required")]
    NoBackends,
    #[error("histograms have different widths ({0} and {1} bits)")]
    WidthMismatch(usize, usize),
    #[error("invalid workflow config: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error(transparent)]
    Grover(#[from] GroverError),
    #[error(transparent)]
    Shor(#[from] ShorError),
    #[error(transparent)]
    Tsp(#[from] TspError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackendComparison {
    pub total_variation: f64,
    pub top_outcome_match: bool,
}

/// Total-variation distance over the union of outcomes, and whether the
/// most frequent outcomes agree.
pub fn compare_backends(a: &Histogram, b: &Histogram) -> Result<BackendComparison, WorkflowError> {
    if a.bits() != b.bits() {
        return Err(WorkflowError::WidthMismatch(a.bits(), b.bits()));
    }
    let keys: BTreeSet<&String> = a.counts().keys().chain(b.counts().keys()).collect();
    let total_variation = 0.5
        * keys
            .into_iter()
            .map(|k| (a.frequency(k) - b.frequency(k)).abs())
            .sum::<f64>();
    Ok(BackendComparison {
        total_variation,
        top_outcome_match: a.mode().map(|m| m.0) == b.mode().map(|m| m.0),
    })
}
