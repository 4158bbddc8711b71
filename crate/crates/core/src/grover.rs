//! Single-target Grover search.

use std::f64::consts::FRAC_PI_4;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError};
use crate::rng::Seed;
use crate::sim::Histogram;

pub const MIN_QUBITS: usize = 2;
pub const MAX_QUBITS: usize = 10;
pub const DEFAULT_QUBITS: usize = 4;
pub const DEFAULT_ITERATIONS: u32 = 2;
pub const DEFAULT_SHOTS: u64 = 1024;

const TARGET_STREAM: u64 = 0x6772_6f76;

#[derive(Debug, Error)]
pub enum GroverError {
    #[error("n_qubits = {0} is outside {MIN_QUBITS}..={MAX_QUBITS}")]
    Qubits(usize),
    #[error("target {target} does not fit in {n_qubits} qubits")]
    Target { target: u64, n_qubits: usize },
    #[error("shots must be positive")]
    ZeroShots,
    #[error("histogram is empty")]
    EmptyHistogram,
    #[error("histogram keys have {found} bits, expected {expected}")]
    HistogramWidth { found: usize, expected: usize },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroverProblem {
    pub n_qubits: usize,
    pub target: u64,
    pub iterations: u32,
    pub shots: u64,
}

impl GroverProblem {
    pub fn new(n_qubits: usize, target: u64) -> Result<Self, GroverError> {
        let p = GroverProblem {
            n_qubits,
            target,
            iterations: DEFAULT_ITERATIONS,
            shots: DEFAULT_SHOTS,
        };
        p.validate()?;
        Ok(p)
    }

    /// Target drawn uniformly from `[0, 2^n)` with `seed`.
    pub fn random_target(n_qubits: usize, seed: Seed) -> Result<Self, GroverError> {
        check_qubits(n_qubits)?;
        let target = seed.rng(TARGET_STREAM).random_range(0..1u64 << n_qubits);
        GroverProblem::new(n_qubits, target)
    }

    pub fn with_iterations(mut self, iterations: u32) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn with_optimal_iterations(self) -> Self {
        let k = optimal_iterations(self.n_qubits);
        self.with_iterations(k)
    }

    pub fn with_shots(mut self, shots: u64) -> Self {
        self.shots = shots;
        self
    }

    pub fn validate(&self) -> Result<(), GroverError> {
        check_qubits(self.n_qubits)?;
        check_target(self.target, self.n_qubits)?;
        if self.shots == 0 {
            return Err(GroverError::ZeroShots);
        }
        Ok(())
    }
}

fn check_qubits(n: usize) -> Result<(), GroverError> {
    if (MIN_QUBITS..=MAX_QUBITS).contains(&n) {
        Ok(())
    } else {
        Err(GroverError::Qubits(n))
    }
}

fn check_target(target: u64, n_qubits: usize) -> Result<(), GroverError> {
    if target < 1 << n_qubits {
        Ok(())
    } else {
        Err(GroverError::Target { target, n_qubits })
    }
}

/// ⌊(π/4)·√(2^n)⌋
pub fn optimal_iterations(n_qubits: usize) -> u32 {
    (FRAC_PI_4 * 2f64.powf(n_qubits as f64 / 2.0)).floor() as u32
}

/// sin²((2k+1)·θ) with sin θ = 2^{-n/2}.
pub fn success_probability(n_qubits: usize, iterations: u32) -> f64 {
    let theta = 2f64.powf(-(n_qubits as f64) / 2.0).asin();
    ((2 * iterations + 1) as f64 * theta).sin().powi(2)
}

fn wrap_zero_bits(c: &mut Circuit, pattern: u64, n: usize) {
    for q in (0..n).filter(|q| pattern >> q & 1 == 0) {
        c.x(q);
    }
}

/// Phase oracle: −1 on `|target⟩`, +1 elsewhere.
///
/// Qubits whose target bit is 0 are wrapped in X so the marked state maps to
/// all-ones, where a multi-controlled Z flips its sign.
pub fn build_oracle(target: u64, n: usize) -> Result<Circuit, GroverError> {
    check_qubits(n)?;
    check_target(target, n)?;
    let mut c = Circuit::new(n, 0);
    wrap_zero_bits(&mut c, target, n);
    c.mcz((0..n - 1).collect(), n - 1);
    wrap_zero_bits(&mut c, target, n);
    Ok(c)
}

/// Reflection about the uniform superposition, up to a global sign.
pub fn build_diffusion(n: usize) -> Result<Circuit, GroverError> {
    check_qubits(n)?;
    let mut c = Circuit::new(n, 0);
    for q in 0..n {
        c.h(q);
    }
    wrap_zero_bits(&mut c, 0, n);
    c.mcz((0..n - 1).collect(), n - 1);
    wrap_zero_bits(&mut c, 0, n);
    for q in 0..n {
        c.h(q);
    }
    Ok(c)
}

pub fn build_grover_circuit(problem: &GroverProblem) -> Result<Circuit, GroverError> {
    problem.validate()?;
    let n = problem.n_qubits;
    let all: Vec<usize> = (0..n).collect();
    let oracle = build_oracle(problem.target, n)?;
    let diffusion = build_diffusion(n)?;

    let mut c = Circuit::new(n, n);
    c.add_register("search", 0, n);
    for q in 0..n {
        c.h(q);
    }
    c.barrier(0..n);
    for _ in 0..problem.iterations {
        c.compose(&oracle, &all)?;
        c.barrier(0..n);
        c.compose(&diffusion, &all)?;
        c.barrier(0..n);
    }
    c.measure_all();
    Ok(c)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroverAnalysis {
    pub found: u64,
    pub frequency: f64,
    pub success: bool,
}

pub fn analyze_grover(h: &Histogram, problem: &GroverProblem) -> Result<GroverAnalysis, GroverError> {
    if h.bits() != problem.n_qubits {
        return Err(GroverError::HistogramWidth {
            found: h.bits(),
            expected: problem.n_qubits,
        });
    }
    let (found, count) = h.mode().ok_or(GroverError::EmptyHistogram)?;
    Ok(GroverAnalysis {
        found,
        frequency: count as f64 / h.shots() as f64,
        success: found == problem.target,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn oracle_for_fifteen_is_bare_mcz() {
        let c = build_oracle(15, 4).unwrap();
        assert_eq!(c.ops().len(), 1);
        assert_eq!(c.ops()[0].kind(), "mcz");
    }

    #[test]
    fn oracle_for_zero_wraps_every_qubit() {
        let c = build_oracle(0, 4).unwrap();
        assert_eq!(c.ops().iter().filter(|g| g.kind() == "x").count(), 8);
    }

    #[test]
    fn oracle_for_five_wraps_qubits_one_and_three() {
        let c = build_oracle(5, 4).unwrap();
        let mut xs: Vec<usize> = c
            .ops()
            .iter()
            .filter(|g| g.kind() == "x")
            .flat_map(|g| g.qubits())
            .collect();
        xs.sort();
        assert_eq!(xs, vec![1, 1, 3, 3]);
    }

    #[test]
    fn bad_inputs() {
        assert!(matches!(build_oracle(16, 4), Err(GroverError::Target { .. })));
        assert!(matches!(build_diffusion(1), Err(GroverError::Qubits(1))));
        assert!(GroverProblem::new(11, 0).is_err());
        assert!(GroverProblem::new(4, 3).unwrap().with_shots(0).validate().is_err());
    }

    #[test]
    fn optimal_iteration_counts() {
        assert_eq!(optimal_iterations(4), 3);
        assert_eq!(optimal_iterations(2), 1);
    }

    #[test]
    fn analytic_success_values() {
        assert!((success_probability(4, 2) - 3721.0 / 4096.0).abs() < 1e-9);
        assert!((success_probability(4, 3) - 0.961_318_969_726_562_5).abs() < 1e-9);
        assert!((success_probability(4, 0) - 1.0 / 16.0).abs() < 1e-12);
    }

    #[test]
    fn analysis_tie_and_errors() {
        let p = GroverProblem::new(4, 1).unwrap();
        let h = Histogram::from_values(4, [0, 1]);
        let a = analyze_grover(&h, &p).unwrap();
        assert_eq!(a.found, 0);
        assert!(!a.success);
        let empty = Histogram::from_counts(4, BTreeMap::new()).unwrap();
        assert!(matches!(analyze_grover(&empty, &p), Err(GroverError::EmptyHistogram)));
    }

    #[test]
    fn random_target_is_seeded() {
        let a = GroverProblem::random_target(4, Seed(3)).unwrap();
        let b = GroverProblem::random_target(4, Seed(3)).unwrap();
        assert_eq!(a, b);
        assert!(a.target < 16);
    }
}
