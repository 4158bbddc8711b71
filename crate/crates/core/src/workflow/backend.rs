use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::rng::Seed;
use crate::sim::{run_ideal, run_noisy, Histogram, NoiseModel, SimError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Ideal,
    Noisy,
}

/// A local execution target. `queue_delay_ms` simulates time spent waiting
/// in a remote queue before the job starts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendSpec {
    pub name: String,
    pub kind: BackendKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseModel>,
    #[serde(default)]
    pub queue_delay_ms: u64,
}

impl BackendSpec {
    pub fn ideal(name: impl Into<String>) -> Self {
        BackendSpec {
            name: name.into(),
            kind: BackendKind::Ideal,
            noise: None,
            queue_delay_ms: 0,
        }
    }

    pub fn noisy(name: impl Into<String>, noise: NoiseModel) -> Self {
        BackendSpec {
            name: name.into(),
            kind: BackendKind::Noisy,
            noise: Some(noise),
            queue_delay_ms: 0,
        }
    }

    pub fn with_queue_delay(mut self, ms: u64) -> Self {
        self.queue_delay_ms = ms;
        self
    }

    /// Every problem with this spec, prefixed by the backend name.
    pub fn validate(&self) -> Result<(), Vec<String>> {
        let label = if self.name.is_empty() { "<unnamed>" } else { &self.name };
        let mut errs = Vec::new();
        if self.name.trim().is_empty() {
            errs.push("backend name must be non-empty".to_string());
        }
        match (self.kind, &self.noise) {
            (BackendKind::Noisy, None) => errs.push(format!("backend '{label}': noisy backend needs a noise model")),
            (BackendKind::Noisy, Some(noise)) => {
                if let Err(e) = noise.check() {
                    errs.push(format!("backend '{label}': {e}"));
                }
            }
            (BackendKind::Ideal, Some(_)) => {
                errs.push(format!("backend '{label}': ideal backend takes no noise model"))
            }
            (BackendKind::Ideal, None) => {}
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    /// Runs synchronously, ignoring the queue delay.
    pub fn run(&self, circuit: &Circuit, shots: u64, seed: Seed) -> Result<Histogram, SimError> {
        match (self.kind, &self.noise) {
            (BackendKind::Noisy, Some(noise)) => run_noisy(circuit, shots, noise, seed),
            _ => run_ideal(circuit, shots, seed),
        }
    }
}
