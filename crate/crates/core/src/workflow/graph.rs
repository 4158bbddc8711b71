use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::sync::{mpsc, Arc};
use std::thread;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use super::WorkflowError;
use crate::circuit::Circuit;
use crate::grover::GroverAnalysis;
use crate::shor::ShorTrace;
use crate::sim::Histogram;
use crate::tsp::{DecodeDocument, InstanceDocument, TspDecode, TspEncoding, TspInstance, TspTour};

/// Value produced by one task and handed to its dependents.
#[derive(Clone, Debug)]
pub enum TaskOutput {
    Coords(Vec<(f64, f64)>),
    Instance(TspInstance),
    /// Candidate tours with their eigenstate strings.
    Tours(Vec<(TspTour, String)>),
    TspCircuits {
        encoding: TspEncoding,
        circuits: Vec<Circuit>,
    },
    Circuit(Circuit),
    Histogram(Histogram),
    Grover(GroverAnalysis),
    TspDecode(TspDecode),
    Shor {
        trace: ShorTrace,
        /// Circuits sent to the backend while factoring.
        submissions: u64,
    },
    Json(Value),
}

impl TaskOutput {
    pub fn to_json(&self) -> Value {
        match self {
            TaskOutput::Coords(c) => json!({ "coords": c }),
            TaskOutput::Instance(inst) => json!(InstanceDocument::from(inst)),
            TaskOutput::Tours(tours) => Value::Array(
                tours
                    .iter()
                    .map(|(t, bits)| json!({ "order": t.label(), "eigenstate": bits }))
                    .collect(),
            ),
            TaskOutput::TspCircuits { encoding, circuits } => json!({
                "encoding": encoding,
                "circuits": circuits.iter().map(circuit_summary).collect::<Vec<_>>(),
            }),
            TaskOutput::Circuit(c) => circuit_summary(c),
            TaskOutput::Histogram(h) => json!(h),
            TaskOutput::Grover(a) => json!(a),
            TaskOutput::TspDecode(d) => json!(DecodeDocument::from(d)),
            TaskOutput::Shor { trace, submissions } => json!({ "trace": trace, "submissions": submissions }),
            TaskOutput::Json(v) => v.clone(),
        }
    }
}

fn circuit_summary(c: &Circuit) -> Value {
    json!({
        "n_qubits": c.n_qubits(),
        "n_clbits": c.n_clbits(),
        "gate_count": c.gate_count(),
    })
}

/// Outputs of a task's dependencies, keyed by task id.
#[derive(Clone, Debug, Default)]
pub struct TaskInputs {
    outputs: BTreeMap<String, Arc<TaskOutput>>,
}

impl TaskInputs {
    pub fn get(&self, id: &str) -> Result<&TaskOutput, String> {
        self.outputs
            .get(id)
            .map(Arc::as_ref)
            .ok_or_else(|| format!("missing input '{id}'"))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &TaskOutput)> {
        self.outputs.iter().map(|(k, v)| (k.as_str(), v.as_ref()))
    }
}

pub type TaskFn = Arc<dyn Fn(&TaskInputs) -> Result<TaskOutput, String> + Send + Sync>;

#[derive(Clone)]
pub struct Task {
    pub id: String,
    pub kind: String,
    pub deps: Vec<String>,
    run: TaskFn,
}

impl fmt::Debug for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Task")
            .field("id", &self.id)
            .field("kind", &self.kind)
            .field("deps", &self.deps)
            .finish_non_exhaustive()
    }
}

/// Tasks in insertion order. Dependencies may be declared before the tasks
/// they name; [`TaskGraph::topological_order`] checks the finished graph.
#[derive(Clone, Debug, Default)]
pub struct TaskGraph {
    tasks: Vec<Task>,
    index: BTreeMap<String, usize>,
}

impl TaskGraph {
    pub fn new() -> Self {
        TaskGraph::default()
    }

    pub fn add_task<F>(
        &mut self,
        id: impl Into<String>,
        kind: impl Into<String>,
        deps: impl IntoIterator<Item = impl Into<String>>,
        run: F,
    ) -> Result<&mut Self, WorkflowError>
    where
        F: Fn(&TaskInputs) -> Result<TaskOutput, String> + Send + Sync + 'static,
    {
        let id = id.into();
        if self.index.contains_key(&id) {
            return Err(WorkflowError::DuplicateTask(id));
        }
        self.index.insert(id.clone(), self.tasks.len());
        self.tasks.push(Task {
            id,
            kind: kind.into(),
            deps: deps.into_iter().map(Into::into).collect(),
            run: Arc::new(run),
        });
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn task(&self, id: &str) -> Option<&Task> {
        self.index.get(id).map(|&i| &self.tasks[i])
    }

    /// Ids of tasks that list `id` as a dependency.
    pub fn dependents(&self, id: &str) -> Vec<&str> {
        self.tasks
            .iter()
            .filter(|t| t.deps.iter().any(|d| d == id))
            .map(|t| t.id.as_str())
            .collect()
    }

    /// Kahn's algorithm, ties broken by insertion order.
    pub fn topological_order(&self) -> Result<Vec<String>, WorkflowError> {
        for t in &self.tasks {
            if let Some(dep) = t.deps.iter().find(|d| !self.index.contains_key(*d)) {
                return Err(WorkflowError::MissingDependency {
                    task: t.id.clone(),
                    dep: dep.clone(),
                });
            }
        }
        let mut pending: Vec<usize> = self.tasks.iter().map(|t| unique(&t.deps).len()).collect();
        let children = self.children();
        let mut ready: VecDeque<usize> = (0..self.tasks.len()).filter(|&i| pending[i] == 0).collect();
        let mut order = Vec::with_capacity(self.tasks.len());
        while let Some(i) = ready.pop_front() {
            order.push(self.tasks[i].id.clone());
            for &c in &children[i] {
                pending[c] -= 1;
                if pending[c] == 0 {
                    ready.push_back(c);
                }
            }
        }
        if order.len() < self.tasks.len() {
            let stuck = (0..self.tasks.len())
                .filter(|&i| pending[i] > 0)
                .map(|i| self.tasks[i].id.clone())
                .collect();
            return Err(WorkflowError::Cycle(stuck));
        }
        Ok(order)
    }

    fn children(&self) -> Vec<Vec<usize>> {
        let mut children = vec![Vec::new(); self.tasks.len()];
        for (i, t) in self.tasks.iter().enumerate() {
            for d in unique(&t.deps) {
                children[self.index[d]].push(i);
            }
        }
        children
    }
}

fn unique(deps: &[String]) -> BTreeSet<&String> {
    deps.iter().collect()
}

/// Milliseconds since the start of [`execute`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TaskTiming {
    pub start_ms: f64,
    pub end_ms: f64,
}

#[derive(Clone, Debug, Default)]
pub struct WorkflowResult {
    pub outputs: BTreeMap<String, Arc<TaskOutput>>,
    /// Error text of every failed task, including those skipped because a
    /// dependency failed.
    pub failures: BTreeMap<String, String>,
    pub timings: BTreeMap<String, TaskTiming>,
    /// Ids in the order their execution started.
    pub start_order: Vec<String>,
    pub makespan_ms: f64,
}

pub const RESULT_FORMAT_VERSION: u32 = 1;

impl WorkflowResult {
    pub fn output(&self, id: &str) -> Option<&TaskOutput> {
        self.outputs.get(id).map(Arc::as_ref)
    }

    pub fn is_success(&self) -> bool {
        self.failures.is_empty()
    }

    /// Outputs and failures only; byte-stable for a fixed graph and seeds.
    pub fn to_json(&self) -> Value {
        json!({
            "version": RESULT_FORMAT_VERSION,
            "outputs": self
                .outputs
                .iter()
                .map(|(k, v)| (k.clone(), v.to_json()))
                .collect::<serde_json::Map<_, _>>(),
            "failures": self.failures,
        })
    }

    pub fn timings_json(&self) -> Value {
        json!({
            "makespan_ms": self.makespan_ms,
            "start_order": self.start_order,
            "tasks": self.timings,
        })
    }
}

struct Finished {
    task: usize,
    outcome: Result<TaskOutput, String>,
    timing: TaskTiming,
}

/// Runs every task after its dependencies, at most `max_parallel` at once.
///
/// A failed task fails all of its descendants without running them;
/// unrelated branches continue.
pub fn execute(graph: &TaskGraph, max_parallel: usize) -> Result<WorkflowResult, WorkflowError> {
    if max_parallel == 0 {
        return Err(WorkflowError::MaxParallel);
    }
    graph.topological_order()?;
    let n = graph.tasks.len();
    let children = graph.children();
    let mut pending: Vec<usize> = graph.tasks.iter().map(|t| unique(&t.deps).len()).collect();
    let mut upstream_failure: Vec<Option<String>> = vec![None; n];
    let mut ready: BTreeSet<usize> = (0..n).filter(|&i| pending[i] == 0).collect();
    let mut result = WorkflowResult::default();
    let t0 = Instant::now();
    let ms = move |t: Instant| (t - t0).as_secs_f64() * 1e3;

    thread::scope(|scope| {
        let (tx, rx) = mpsc::channel::<Finished>();
        let mut running = 0usize;
        let mut settled = 0usize;
        while settled < n {
            while running < max_parallel {
                let Some(i) = ready.pop_first() else { break };
                let task = &graph.tasks[i];
                let inputs = TaskInputs {
                    outputs: task
                        .deps
                        .iter()
                        .map(|d| (d.clone(), Arc::clone(&result.outputs[d])))
                        .collect(),
                };
                result.start_order.push(task.id.clone());
                let tx = tx.clone();
                let run = Arc::clone(&task.run);
                running += 1;
                scope.spawn(move || {
                    let start = Instant::now();
                    let outcome = run(&inputs);
                    let end = Instant::now();
                    let _ = tx.send(Finished {
                        task: i,
                        outcome,
                        timing: TaskTiming {
                            start_ms: ms(start),
                            end_ms: ms(end),
                        },
                    });
                });
            }

            let done = rx.recv().expect("a task is running");
            running -= 1;
            let id = graph.tasks[done.task].id.clone();
            result.timings.insert(id.clone(), done.timing);
            let mut settle = vec![(done.task, done.outcome.is_ok())];
            match done.outcome {
                Ok(out) => {
                    result.outputs.insert(id, Arc::new(out));
                }
                Err(e) => {
                    result.failures.insert(id, e);
                }
            }
            while let Some((i, ok)) = settle.pop() {
                settled += 1;
                for &c in &children[i] {
                    if !ok && upstream_failure[c].is_none() {
                        upstream_failure[c] = Some(graph.tasks[i].id.clone());
                    }
                    pending[c] -= 1;
                    if pending[c] == 0 {
                        match &upstream_failure[c] {
                            Some(up) => {
                                result
                                    .failures
                                    .insert(graph.tasks[c].id.clone(), format!("upstream task '{up}' failed"));
                                settle.push((c, false));
                            }
                            None => {
                                ready.insert(c);
                            }
                        }
                    }
                }
            }
        }
    });
    result.makespan_ms = ms(Instant::now());
    Ok(result)
}
