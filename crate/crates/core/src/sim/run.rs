//! Shot sampling backends.
//!
//! Random streams per seed: measurement draws, gate-noise draws and readout
//! flips each use their own stream, so the noise-free path of the noisy
//! backend consumes exactly the measurement draws of the ideal backend.

use std::collections::HashMap;
use std::rc::Rc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Histogram, Pauli, SimError, StateVector};
use crate::circuit::{Circuit, Gate};
use crate::rng::Seed;

const MEASURE_STREAM: u64 = 0;
const GATE_NOISE_STREAM: u64 = 1;
const READOUT_STREAM: u64 = 2;

/// Keep intermediate states for trajectory restarts only below this many
/// stored amplitudes.
const PREFIX_CACHE_AMPLITUDES: usize = 1 << 22;

/// Depolarizing gate noise plus symmetric readout error.
#[derive(Copy, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub gate_depolarizing_prob: f64,
    pub readout_flip_prob: f64,
}

impl NoiseModel {
    pub fn new(gate_depolarizing_prob: f64, readout_flip_prob: f64) -> Result<Self, SimError> {
        let model = NoiseModel {
            gate_depolarizing_prob,
            readout_flip_prob,
        };
        model.check()?;
        Ok(model)
    }

    pub fn ideal() -> Self {
        NoiseModel::default()
    }

    pub fn check(&self) -> Result<(), SimError> {
        for (name, value) in [
            ("gate_depolarizing_prob", self.gate_depolarizing_prob),
            ("readout_flip_prob", self.readout_flip_prob),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(SimError::Probability { name, value });
            }
        }
        Ok(())
    }
}

/// A validated circuit split into its gate sequence and measurement map.
struct Program<'a> {
    circuit: &'a Circuit,
    gates: Vec<&'a Gate>,
    measured_qubits: Vec<usize>,
    /// Classical-register value of each local measurement outcome.
    outcome_values: Vec<u64>,
    clbits: Vec<usize>,
}

impl<'a> Program<'a> {
    fn new(circuit: &'a Circuit) -> Result<Self, SimError> {
        circuit.validate()?;
        let measurements = circuit.measurements();
        if measurements.is_empty() {
            return Err(SimError::NoMeasurement);
        }
        let measured_qubits: Vec<usize> = measurements.iter().map(|m| m.0).collect();
        let clbits: Vec<usize> = measurements.iter().map(|m| m.1).collect();
        let outcome_values = (0..1usize << measured_qubits.len())
            .map(|k| {
                clbits
                    .iter()
                    .enumerate()
                    .fold(0u64, |acc, (i, &c)| acc | (((k >> i) & 1) as u64) << c)
            })
            .collect();
        Ok(Program {
            circuit,
            gates: circuit.ops().iter().filter(|g| g.is_unitary()).collect(),
            measured_qubits,
            outcome_values,
            clbits,
        })
    }

    fn cdf(&self, state: &StateVector) -> Vec<f64> {
        let mut acc = 0.0;
        state
            .exact_distribution(&self.measured_qubits)
            .expect("measured qubits validated with the circuit")
            .into_iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect()
    }
}

fn draw(cdf: &[f64], u: f64) -> usize {
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

/// Noise-free backend: the final state is computed once and its exact
/// outcome distribution is sampled `shots` times.
pub fn run_ideal(circuit: &Circuit, shots: u64, seed: Seed) -> Result<Histogram, SimError> {
    if shots == 0 {
        return Err(SimError::ZeroShots);
    }
    let program = Program::new(circuit)?;
    let mut state = StateVector::new(circuit.n_qubits())?;
    for g in &program.gates {
        state.apply_unchecked(g, 0);
    }
    let cdf = program.cdf(&state);
    let mut rng = seed.rng(MEASURE_STREAM);
    let values = (0..shots).map(|_| program.outcome_values[draw(&cdf, rng.random::<f64>())]);
    Ok(Histogram::from_values(circuit.n_clbits(), values))
}

/// Exact probability of every classical-register value (index = value,
/// low bit = classical bit 0) of a measured circuit.
pub fn outcome_probabilities(circuit: &Circuit) -> Result<Vec<f64>, SimError> {
    let program = Program::new(circuit)?;
    if circuit.n_clbits() > super::MAX_QUBITS {
        return Err(SimError::Capacity {
            n_qubits: circuit.n_clbits(),
            max: super::MAX_QUBITS,
        });
    }
    let mut state = StateVector::new(circuit.n_qubits())?;
    for g in &program.gates {
        state.apply_unchecked(g, 0);
    }
    let mut probs = vec![0.0; 1 << circuit.n_clbits()];
    for (k, p) in state
        .exact_distribution(&program.measured_qubits)?
        .into_iter()
        .enumerate()
    {
        probs[program.outcome_values[k] as usize] += p;
    }
    Ok(probs)
}

/// Gate-noise events of one shot: `(gate position, qubit, pauli)`.
type Trajectory = Vec<(usize, usize, Pauli)>;

fn sample_trajectory(program: &Program<'_>, p: f64, rng: &mut impl Rng) -> Trajectory {
    let mut events = Vec::new();
    for (pos, g) in program.gates.iter().enumerate() {
        if rng.random::<f64>() < p {
            let touched = g.qubits();
            let qubit = touched[rng.random_range(0..touched.len())];
            let pauli = match rng.random_range(0..3) {
                0 => Pauli::X,
                1 => Pauli::Y,
                _ => Pauli::Z,
            };
            events.push((pos, qubit, pauli));
        }
    }
    events
}

/// Noisy backend: every shot follows its own Pauli trajectory.
///
/// After each gate, with probability `gate_depolarizing_prob`, a uniformly
/// chosen Pauli hits a uniformly chosen qubit of that gate; each measured bit
/// is then flipped with probability `readout_flip_prob`. Shots that draw
/// the same trajectory share one simulation.
pub fn run_noisy(circuit: &Circuit, shots: u64, noise: &NoiseModel, seed: Seed) -> Result<Histogram, SimError> {
    noise.check()?;
    if shots == 0 {
        return Err(SimError::ZeroShots);
    }
    let program = Program::new(circuit)?;
    let n = circuit.n_qubits();
    let p = noise.gate_depolarizing_prob;

    let mut noise_rng = seed.rng(GATE_NOISE_STREAM);
    let trajectories: Vec<Trajectory> = (0..shots)
        .map(|_| {
            if p > 0.0 {
                sample_trajectory(&program, p, &mut noise_rng)
            } else {
                Vec::new()
            }
        })
        .collect();

    // ideal prefix states: prefix[k] = state after the first k gates
    let keep_prefix = program.gates.len().saturating_add(1).saturating_mul(1 << n) <= PREFIX_CACHE_AMPLITUDES;
    let mut prefix: Vec<StateVector> = Vec::new();
    let mut state = StateVector::new(n)?;
    if keep_prefix {
        prefix.push(state.clone());
    }
    for g in &program.gates {
        state.apply_unchecked(g, 0);
        if keep_prefix {
            prefix.push(state.clone());
        }
    }
    let ideal_cdf = Rc::new(program.cdf(&state));

    let mut cache: HashMap<&Trajectory, Rc<Vec<f64>>> = HashMap::new();
    let mut measure_rng = seed.rng(MEASURE_STREAM);
    let mut readout_rng = seed.rng(READOUT_STREAM);
    let mut values = Vec::with_capacity(shots as usize);
    for traj in &trajectories {
        let cdf = if traj.is_empty() {
            Rc::clone(&ideal_cdf)
        } else {
            Rc::clone(cache.entry(traj).or_insert_with(|| {
                let first = traj[0].0;
                let mut s = if keep_prefix {
                    prefix[first + 1].clone()
                } else {
                    let mut s = StateVector::new(n).expect("capacity checked above");
                    for g in &program.gates[..=first] {
                        s.apply_unchecked(g, 0);
                    }
                    s
                };
                let mut events = traj.iter().peekable();
                for pos in first..program.gates.len() {
                    if pos > first {
                        s.apply_unchecked(program.gates[pos], 0);
                    }
                    while let Some(&(_, q, pauli)) = events.next_if(|e| e.0 == pos) {
                        s.apply_pauli(q, pauli);
                    }
                }
                Rc::new(program.cdf(&s))
            }))
        };
        let mut value = program.outcome_values[draw(&cdf, measure_rng.random::<f64>())];
        if noise.readout_flip_prob > 0.0 {
            for &c in &program.clbits {
                if readout_rng.random::<f64>() < noise.readout_flip_prob {
                    value ^= 1 << c;
                }
            }
        }
        values.push(value);
    }
    Ok(Histogram::from_values(program.circuit.n_clbits(), values))
}
