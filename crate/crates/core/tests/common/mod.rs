#![allow(dead_code)]

use std::f64::consts::TAU;

use ndarray::Array2;
use num_complex::Complex64;
use qflow_core::circuit::{Circuit, DiagonalUnitary, Gate, PermutationUnitary};
use qflow_core::sim::StateVector;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_unitary2(rng: &mut impl Rng) -> [[Complex64; 2]; 2] {
    // U = e^{iα} [[a, -b*], [b, a*]] with |a|²+|b|² = 1
    let theta = rng.random::<f64>() * TAU / 2.0;
    let (phi, psi, alpha) = (
        rng.random::<f64>() * TAU,
        rng.random::<f64>() * TAU,
        rng.random::<f64>() * TAU,
    );
    let a = Complex64::from_polar(theta.cos(), phi);
    let b = Complex64::from_polar(theta.sin(), psi);
    let g = Complex64::from_polar(1.0, alpha);
    [[g * a, -g * b.conj()], [g * b, g * a.conj()]]
}

fn distinct(rng: &mut impl Rng, n: usize, k: usize) -> Vec<usize> {
    let mut all: Vec<usize> = (0..n).collect();
    all.shuffle(rng);
    all.truncate(k);
    all
}

fn random_plain_gate(rng: &mut impl Rng, qubits: &[usize]) -> Gate {
    let q = qubits[0];
    match rng.random_range(0..9) {
        0 => Gate::Hadamard(q),
        1 => Gate::PauliX(q),
        2 => Gate::PauliZ(q),
        3 => Gate::Phase {
            target: q,
            angle: rng.random::<f64>() * TAU,
        },
        4 => Gate::Unitary1Q {
            target: q,
            matrix: random_unitary2(rng),
        },
        5 if qubits.len() >= 2 => Gate::Swap(qubits[0], qubits[1]),
        6 if qubits.len() >= 2 => Gate::MultiControlledZ {
            controls: qubits[1..].to_vec(),
            target: q,
        },
        7 => {
            let k = qubits.len().min(3);
            Gate::Diagonal(DiagonalUnitary {
                qubits: qubits[..k].to_vec(),
                phases: (0..1 << k).map(|_| rng.random::<f64>() * TAU).collect(),
            })
        }
        _ => {
            let k = qubits.len().min(3);
            let mut mapping: Vec<usize> = (0..1 << k).collect();
            mapping.shuffle(rng);
            Gate::Permutation(PermutationUnitary {
                qubits: qubits[..k].to_vec(),
                mapping,
            })
        }
    }
}

/// A random measurement-free circuit using the whole gate vocabulary.
pub fn random_circuit(seed: u64, n: usize, gates: usize) -> Circuit {
    let mut rng = rng(seed);
    let mut c = Circuit::new(n, 0);
    for _ in 0..gates {
        let width = rng.random_range(1..=n.min(4));
        let qs = distinct(&mut rng, n, width);
        let gate = if width >= 2 && rng.random_bool(0.3) {
            let split = rng.random_range(1..width);
            Gate::Controlled {
                controls: qs[..split].to_vec(),
                gate: Box::new(random_plain_gate(&mut rng, &qs[split..])),
            }
        } else {
            random_plain_gate(&mut rng, &qs)
        };
        c.push(gate);
    }
    c
}

pub fn random_state(seed: u64, n: usize) -> StateVector {
    let mut rng = rng(seed);
    let mut amps: Vec<Complex64> = (0..1 << n)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|a| *a /= norm);
    StateVector::from_amplitudes(amps).unwrap()
}

pub fn max_abs_diff(a: &Array2<Complex64>, b: &Array2<Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// max |U†U − I|
pub fn unitarity_error(u: &Array2<Complex64>) -> f64 {
    let uh = u.t().mapv(|z| z.conj());
    let prod = uh.dot(u);
    max_abs_diff(&prod, &Array2::eye(u.nrows()))
}

/// Binomial standard deviation of a count.
pub fn binomial_sigma(shots: u64, p: f64) -> f64 {
    (shots as f64 * p * (1.0 - p)).sqrt()
}
