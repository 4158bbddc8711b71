//! Statevector simulation engine.
//!
//! Basis index bit `q` holds qubit `q`. Diagonal, permutation, Pauli, swap
//! and multi-controlled-Z gates are applied directly on the amplitude
//! vector in O(2^n) without building matrices.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, Gate, Matrix2, Violation};

mod dense;
mod histogram;
mod run;

pub use dense::{dense_unitary, gate_matrix, MAX_DENSE_QUBITS};
pub use histogram::Histogram;
pub use run::{outcome_probabilities, run_ideal, run_noisy, NoiseModel};

pub const MAX_QUBITS: usize = 20;

const NORM_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("{n_qubits} qubits requested; the simulator supports 1..={max}")]
    Capacity { n_qubits: usize, max: usize },
    #[error("invalid gate: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidGate(Vec<Violation>),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("circuit has no measurement")]
    NoMeasurement,
    #[error("measurement cannot be applied as a unitary")]
    MeasurementInUnitary,
    #[error("measured qubit list must be non-empty, distinct and in range")]
    BadMeasuredQubits,
    #[error("dense unitary limited to {max} qubits, circuit has {n_qubits}")]
    TooLargeForDense { n_qubits: usize, max: usize },
    #[error("{name} = {value} is not a probability")]
    Probability { name: &'static str, value: f64 },
    #[error("shot count must be positive")]
    ZeroShots,
    #[error("amplitude vector must have 2^n entries (1 <= n <= {MAX_QUBITS}) and unit norm")]
    BadAmplitudes,
    #[error("histogram: {0}")]
    Histogram(String),
}

/// Single-qubit Pauli error.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    X,
    Y,
    Z,
}

/// Pure state of `n_qubits` qubits as `2^n` complex amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

fn check_capacity(n_qubits: usize) -> Result<(), SimError> {
    if (1..=MAX_QUBITS).contains(&n_qubits) {
        Ok(())
    } else {
        Err(SimError::Capacity {
            n_qubits,
            max: MAX_QUBITS,
        })
    }
}

fn mask(qubits: &[usize]) -> usize {
    qubits.iter().fold(0, |m, &q| m | (1 << q))
}

/// Local index formed from the bits of `index` at `qubits` (qubits[0] low).
#[inline]
fn gather(index: usize, qubits: &[usize]) -> usize {
    qubits
        .iter()
        .enumerate()
        .fold(0, |acc, (i, &q)| acc | (((index >> q) & 1) << i))
}

/// Inverse of [`gather`]: places the bits of `local` at `qubits`.
#[inline]
fn scatter(local: usize, qubits: &[usize]) -> usize {
    qubits
        .iter()
        .enumerate()
        .fold(0, |acc, (i, &q)| acc | (((local >> i) & 1) << q))
}

impl StateVector {
    /// |0…0⟩ on `n_qubits` qubits.
    pub fn new(n_qubits: usize) -> Result<Self, SimError> {
        check_capacity(n_qubits)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector { n_qubits, amps })
    }

    /// Computational basis state |index⟩.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self, SimError> {
        let mut s = StateVector::new(n_qubits)?;
        if index >= s.amps.len() {
            return Err(SimError::BadAmplitudes);
        }
        s.amps[0] = Complex64::new(0.0, 0.0);
        s.amps[index] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self, SimError> {
        let len = amps.len();
        if !len.is_power_of_two() {
            return Err(SimError::BadAmplitudes);
        }
        let n_qubits = len.trailing_zeros() as usize;
        check_capacity(n_qubits).map_err(|_| SimError::BadAmplitudes)?;
        let s = StateVector { n_qubits, amps };
        if (s.norm_sqr() - 1.0).abs() > NORM_TOL {
            return Err(SimError::BadAmplitudes);
        }
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(Complex64::norm_sqr).sum()
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        let overlap: Complex64 = self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum();
        overlap.norm_sqr()
    }

    /// Applies one gate. Barriers are no-ops; measurements are rejected.
    pub fn apply(&mut self, gate: &Gate) -> Result<(), SimError> {
        let v = gate.violations(self.n_qubits);
        if !v.is_empty() {
            return Err(SimError::InvalidGate(v));
        }
        if gate.is_measurement() {
            return Err(SimError::MeasurementInUnitary);
        }
        self.apply_unchecked(gate, 0);
        Ok(())
    }

    /// Applies every gate of a measurement-free circuit.
    pub fn apply_circuit(&mut self, circuit: &Circuit) -> Result<(), SimError> {
        if circuit.n_qubits() != self.n_qubits {
            return Err(SimError::Capacity {
                n_qubits: circuit.n_qubits(),
                max: self.n_qubits,
            });
        }
        for gate in circuit.ops() {
            self.apply(gate)?;
        }
        Ok(())
    }

    pub fn apply_pauli(&mut self, qubit: usize, pauli: Pauli) {
        let bit = 1 << qubit;
        match pauli {
            Pauli::X => self.swap_pairs(bit, 0),
            Pauli::Z => self.negate_where(bit),
            Pauli::Y => {
                // Y = i·X·Z
                self.negate_where(bit);
                self.swap_pairs(bit, 0);
                let i = Complex64::new(0.0, 1.0);
                self.amps.iter_mut().for_each(|a| *a *= i);
            }
        }
    }

    /// Kernel dispatch; `cmask` holds control bits that must all be set.
    pub(crate) fn apply_unchecked(&mut self, gate: &Gate, cmask: usize) {
        match gate {
            Gate::Hadamard(t) => {
                let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
                self.apply_matrix(*t, &[[h, h], [h, -h]], cmask);
            }
            Gate::PauliX(t) => self.swap_pairs(1 << t, cmask),
            Gate::PauliZ(t) => self.negate_where(cmask | (1 << t)),
            Gate::Phase { target, angle } => {
                let f = Complex64::from_polar(1.0, *angle);
                let m = cmask | (1 << target);
                for (i, a) in self.amps.iter_mut().enumerate() {
                    if i & m == m {
                        *a *= f;
                    }
                }
            }
            Gate::Unitary1Q { target, matrix } => self.apply_matrix(*target, matrix, cmask),
            Gate::Controlled { controls, gate } => self.apply_unchecked(gate, cmask | mask(controls)),
            Gate::MultiControlledZ { controls, target } => self.negate_where(cmask | mask(controls) | (1 << target)),
            Gate::Swap(a, b) => {
                let (ba, bb) = (1 << a, 1 << b);
                for i in 0..self.amps.len() {
                    if i & ba != 0 && i & bb == 0 && i & cmask == cmask {
                        self.amps.swap(i, i ^ ba ^ bb);
                    }
                }
            }
            Gate::Diagonal(d) => {
                let factors: Vec<Complex64> = d.phases.iter().map(|&p| Complex64::from_polar(1.0, p)).collect();
                for (i, a) in self.amps.iter_mut().enumerate() {
                    if i & cmask == cmask {
                        *a *= factors[gather(i, &d.qubits)];
                    }
                }
            }
            Gate::Permutation(p) => {
                let qmask = mask(&p.qubits);
                let targets: Vec<usize> = p.mapping.iter().map(|&m| scatter(m, &p.qubits)).collect();
                let mut out = self.amps.clone();
                for (i, a) in self.amps.iter().enumerate() {
                    if i & cmask == cmask {
                        out[(i & !qmask) | targets[gather(i, &p.qubits)]] = *a;
                    }
                }
                self.amps = out;
            }
            Gate::Barrier(_) | Gate::Measure { .. } => {}
        }
    }

    fn apply_matrix(&mut self, target: usize, m: &Matrix2, cmask: usize) {
        let bit = 1 << target;
        for i in 0..self.amps.len() {
            if i & bit == 0 && i & cmask == cmask {
                let j = i | bit;
                let (a0, a1) = (self.amps[i], self.amps[j]);
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[j] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    fn swap_pairs(&mut self, bit: usize, cmask: usize) {
        for i in 0..self.amps.len() {
            if i & bit == 0 && i & cmask == cmask {
                self.amps.swap(i, i | bit);
            }
        }
    }

    fn negate_where(&mut self, m: usize) {
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & m == m {
                *a = -*a;
            }
        }
    }

    /// Exact outcome probabilities of measuring `measured` (in that order,
    /// `measured[0]` as the low bit of the outcome index), marginalized over
    /// the remaining qubits.
    pub fn exact_distribution(&self, measured: &[usize]) -> Result<Vec<f64>, SimError> {
        if measured.is_empty()
            || measured.iter().any(|&q| q >= self.n_qubits)
            || mask(measured).count_ones() as usize != measured.len()
        {
            return Err(SimError::BadMeasuredQubits);
        }
        let mut probs = vec![0.0; 1 << measured.len()];
        for (i, a) in self.amps.iter().enumerate() {
            probs[gather(i, measured)] += a.norm_sqr();
        }
        Ok(probs)
    }
}

/// |0…0⟩ on `n_qubits` qubits.
pub fn init_state(n_qubits: usize) -> Result<StateVector, SimError> {
    StateVector::new(n_qubits)
}

/// Returns `gate · state`.
pub fn apply_gate(mut state: StateVector, gate: &Gate) -> Result<StateVector, SimError> {
    state.apply(gate)?;
    Ok(state)
}

/// Final state of a measurement-free circuit started from |0…0⟩.
pub fn simulate(circuit: &Circuit) -> Result<StateVector, SimError> {
    let mut s = StateVector::new(circuit.n_qubits())?;
    s.apply_circuit(circuit)?;
    Ok(s)
}
