use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{BackendSpec, WorkflowError};
use crate::circuit::Circuit;
use crate::rng::Seed;
use crate::sim::Histogram;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobStatus {
    fn can_become(self, next: JobStatus) -> bool {
        matches!(
            (self, next),
            (JobStatus::Queued, JobStatus::Running)
                | (JobStatus::Running, JobStatus::Done)
                | (JobStatus::Running, JobStatus::Failed)
        )
    }
}

#[derive(Debug)]
struct JobState {
    status: JobStatus,
    started_at: Option<Instant>,
    finished_at: Option<Instant>,
    outcome: Option<Result<Histogram, String>>,
}

#[derive(Debug)]
struct JobShared {
    id: u64,
    backend: String,
    submitted_at: Instant,
    state: Mutex<JobState>,
    changed: Condvar,
}

impl JobShared {
    fn advance(&self, next: JobStatus, outcome: Option<Result<Histogram, String>>) {
        let mut st = self.state.lock().expect("job state lock");
        assert!(
            st.status.can_become(next),
            "job {}: {:?} -> {:?}",
            self.id,
            st.status,
            next
        );
        st.status = next;
        let now = Instant::now();
        match next {
            JobStatus::Running => st.started_at = Some(now),
            _ => {
                st.finished_at = Some(now);
                st.outcome = outcome;
            }
        }
        drop(st);
        self.changed.notify_all();
    }
}

/// Shared handle to one submitted circuit execution. Clones refer to the
/// same job; any number of threads may await it.
#[derive(Clone, Debug)]
pub struct JobHandle {
    shared: Arc<JobShared>,
}

impl JobHandle {
    pub fn id(&self) -> u64 {
        self.shared.id
    }

    pub fn backend(&self) -> &str {
        &self.shared.backend
    }

    pub fn status(&self) -> JobStatus {
        self.shared.state.lock().expect("job state lock").status
    }

    pub fn submitted_at(&self) -> Instant {
        self.shared.submitted_at
    }

    pub fn started_at(&self) -> Option<Instant> {
        self.shared.state.lock().expect("job state lock").started_at
    }

    pub fn finished_at(&self) -> Option<Instant> {
        self.shared.state.lock().expect("job state lock").finished_at
    }

    /// Blocks until the job is done or failed. Repeated calls return the
    /// same value.
    pub fn await_result(&self) -> Result<Histogram, WorkflowError> {
        let guard = self.shared.state.lock().expect("job state lock");
        let st = self
            .shared
            .changed
            .wait_while(guard, |st| st.outcome.is_none())
            .expect("job state lock");
        match st.outcome.as_ref().expect("finished job has an outcome") {
            Ok(h) => Ok(h.clone()),
            Err(cause) => Err(WorkflowError::JobFailed {
                job: self.shared.id,
                cause: cause.clone(),
            }),
        }
    }
}

/// Asynchronous executor: every submission runs on its own thread after the
/// backend's simulated queue delay.
#[derive(Debug, Default)]
pub struct JobEngine {
    next_id: AtomicU64,
}

impl JobEngine {
    pub fn new() -> Self {
        JobEngine::default()
    }

    /// Number of jobs accepted so far.
    pub fn submitted(&self) -> u64 {
        self.next_id.load(Ordering::SeqCst)
    }

    /// Validates and enqueues a circuit; returns without waiting for it.
    pub fn submit(
        &self,
        circuit: &Circuit,
        backend: &BackendSpec,
        shots: u64,
        seed: Seed,
    ) -> Result<JobHandle, WorkflowError> {
        circuit.validate()?;
        backend.validate().map_err(|v| WorkflowError::Backend(v.join("; ")))?;
        if shots == 0 {
            return Err(WorkflowError::ZeroShots);
        }
        let shared = Arc::new(JobShared {
            id: self.next_id.fetch_add(1, Ordering::SeqCst),
            backend: backend.name.clone(),
            submitted_at: Instant::now(),
            state: Mutex::new(JobState {
                status: JobStatus::Queued,
                started_at: None,
                finished_at: None,
                outcome: None,
            }),
            changed: Condvar::new(),
        });
        let job = Arc::clone(&shared);
        let circuit = circuit.clone();
        let backend = backend.clone();
        thread::spawn(move || {
            thread::sleep(Duration::from_millis(backend.queue_delay_ms));
            job.advance(JobStatus::Running, None);
            match backend.run(&circuit, shots, seed) {
                Ok(h) => job.advance(JobStatus::Done, Some(Ok(h))),
                Err(e) => job.advance(JobStatus::Failed, Some(Err(e.to_string()))),
            }
        });
        Ok(JobHandle { shared })
    }

    /// One handle per circuit; `seeds[i]` drives circuit `i`.
    pub fn submit_all(
        &self,
        circuits: &[Circuit],
        backend: &BackendSpec,
        shots: u64,
        seeds: &[Seed],
    ) -> Result<Vec<JobHandle>, WorkflowError> {
        circuits
            .iter()
            .zip(seeds)
            .map(|(c, &s)| self.submit(c, backend, shots, s))
            .collect()
    }
}
