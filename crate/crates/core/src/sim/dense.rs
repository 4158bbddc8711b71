//! Dense-matrix route: every gate is expanded to its full local matrix and
//! embedded into the `2^n`-dimensional space. Slow, but shares nothing with
//! the in-place kernels, which makes it a usable oracle for them.

use std::f64::consts::FRAC_1_SQRT_2;

use ndarray::Array2;
use num_complex::Complex64;

use super::SimError;
use crate::circuit::{Circuit, Gate};

pub const MAX_DENSE_QUBITS: usize = 10;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn from_rows(rows: [[Complex64; 2]; 2]) -> Array2<Complex64> {
    Array2::from_shape_fn((2, 2), |(i, j)| rows[i][j])
}

/// The matrix of `gate` over its own qubits, returned with that qubit list
/// (`qubits[0]` is the low bit of the row/column index). `None` for
/// measurements and barriers.
pub fn gate_matrix(gate: &Gate) -> Option<(Vec<usize>, Array2<Complex64>)> {
    let h = c(FRAC_1_SQRT_2);
    let zero = c(0.0);
    let one = c(1.0);
    let out = match gate {
        Gate::Hadamard(t) => (vec![*t], from_rows([[h, h], [h, -h]])),
        Gate::PauliX(t) => (vec![*t], from_rows([[zero, one], [one, zero]])),
        Gate::PauliZ(t) => (vec![*t], from_rows([[one, zero], [zero, -one]])),
        Gate::Phase { target, angle } => (
            vec![*target],
            from_rows([[one, zero], [zero, Complex64::from_polar(1.0, *angle)]]),
        ),
        Gate::Unitary1Q { target, matrix } => (vec![*target], from_rows(*matrix)),
        Gate::Swap(a, b) => {
            let mut m = Array2::zeros((4, 4));
            m[[0, 0]] = one;
            m[[1, 2]] = one;
            m[[2, 1]] = one;
            m[[3, 3]] = one;
            (vec![*a, *b], m)
        }
        Gate::MultiControlledZ { controls, target } => {
            let mut qs = controls.clone();
            qs.push(*target);
            let dim = 1 << qs.len();
            let mut m = Array2::eye(dim);
            m[[dim - 1, dim - 1]] = -one;
            (qs, m)
        }
        Gate::Diagonal(d) => {
            let dim = d.phases.len();
            let mut m = Array2::zeros((dim, dim));
            for (k, &p) in d.phases.iter().enumerate() {
                m[[k, k]] = Complex64::from_polar(1.0, p);
            }
            (d.qubits.clone(), m)
        }
        Gate::Permutation(p) => {
            let dim = p.mapping.len();
            let mut m = Array2::zeros((dim, dim));
            for (k, &to) in p.mapping.iter().enumerate() {
                m[[to, k]] = one;
            }
            (p.qubits.clone(), m)
        }
        Gate::Controlled { controls, gate } => {
            let (inner_qs, inner) = gate_matrix(gate)?;
            let inner_dim = inner.nrows();
            let dim = inner_dim << controls.len();
            let active = dim - inner_dim;
            let mut m = Array2::eye(dim);
            for i in 0..inner_dim {
                for j in 0..inner_dim {
                    m[[active + i, active + j]] = inner[[i, j]];
                }
            }
            let mut qs = inner_qs;
            qs.extend(controls);
            (qs, m)
        }
        Gate::Measure { .. } | Gate::Barrier(_) => return None,
    };
    Some(out)
}

/// Left-multiplies `acc` by the embedding of `local` acting on `qubits`.
fn left_multiply(acc: &mut Array2<Complex64>, qubits: &[usize], local: &Array2<Complex64>) {
    let dim = acc.nrows();
    let k = qubits.len();
    let qmask: usize = qubits.iter().map(|&q| 1 << q).sum();
    let offsets: Vec<usize> = (0..1usize << k)
        .map(|l| (0..k).filter(|&i| l >> i & 1 == 1).map(|i| 1 << qubits[i]).sum())
        .collect();
    let mut buf = vec![c(0.0); offsets.len()];
    for col in 0..dim {
        for base in (0..dim).filter(|b| b & qmask == 0) {
            for (l, &off) in offsets.iter().enumerate() {
                buf[l] = acc[[base | off, col]];
            }
            for (r, &off) in offsets.iter().enumerate() {
                let mut v = c(0.0);
                for (l, b) in buf.iter().enumerate() {
                    v += local[[r, l]] * b;
                }
                acc[[base | off, col]] = v;
            }
        }
    }
}

/// Full `2^n × 2^n` matrix of a measurement-free circuit (`n ≤ 10`).
pub fn dense_unitary(circuit: &Circuit) -> Result<Array2<Complex64>, SimError> {
    let n = circuit.n_qubits();
    if n > MAX_DENSE_QUBITS {
        return Err(SimError::TooLargeForDense {
            n_qubits: n,
            max: MAX_DENSE_QUBITS,
        });
    }
    if circuit.has_measurement() {
        return Err(SimError::MeasurementInUnitary);
    }
    circuit.validate()?;
    let mut acc = Array2::eye(1 << n);
    for gate in circuit.ops() {
        if let Some((qs, m)) = gate_matrix(gate) {
            left_multiply(&mut acc, &qs, &m);
        }
    }
    Ok(acc)
}
