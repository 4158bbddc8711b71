use std::f64::consts::{PI, TAU};

use super::{Circuit, CircuitError, DiagonalUnitary, Gate, PermutationUnitary};

/// Largest register accepted by [`qft`] and [`inverse_qft`].
pub const MAX_QFT_QUBITS: usize = 12;

/// Largest `t` accepted by [`powers_of_unitary`].
pub const MAX_POWER_EXPONENT: u32 = 12;

/// Quantum Fourier transform on `n` qubits, including the terminal swap
/// stage, so that its matrix is `exp(2πi·x·y/2^n)/√(2^n)` with qubit 0 as
/// the low bit.
pub fn qft(n: usize) -> Result<Circuit, CircuitError> {
    if !(1..=MAX_QFT_QUBITS).contains(&n) {
        return Err(CircuitError::OutOfRange {
            what: "qft qubits",
            value: n,
            min: 1,
            max: MAX_QFT_QUBITS,
        });
    }
    let mut c = Circuit::new(n, 0);
    for j in (0..n).rev() {
        c.h(j);
        for k in (0..j).rev() {
            c.cphase(k, j, PI / (1u64 << (j - k)) as f64);
        }
    }
    for i in 0..n / 2 {
        c.swap(i, n - 1 - i);
    }
    Ok(c)
}

pub fn inverse_qft(n: usize) -> Result<Circuit, CircuitError> {
    qft(n)?.inverse()
}

/// The abstract unitary payload of a phase-estimation ladder.
#[derive(Clone, Debug, PartialEq)]
pub enum BlockUnitary {
    Diagonal(DiagonalUnitary),
    Permutation(PermutationUnitary),
}

impl BlockUnitary {
    pub fn qubits(&self) -> &[usize] {
        match self {
            BlockUnitary::Diagonal(d) => &d.qubits,
            BlockUnitary::Permutation(p) => &p.qubits,
        }
    }

    pub fn to_gate(&self) -> Gate {
        match self {
            BlockUnitary::Diagonal(d) => Gate::Diagonal(d.clone()),
            BlockUnitary::Permutation(p) => Gate::Permutation(p.clone()),
        }
    }
}

/// `u` raised to the power `2^t`.
///
/// Diagonal phases are multiplied by `2^t` and reduced into `[0, 2π)`;
/// permutations are squared `t` times. `t = 0` returns `u` unchanged.
pub fn powers_of_unitary(u: &BlockUnitary, t: u32) -> Result<BlockUnitary, CircuitError> {
    if t > MAX_POWER_EXPONENT {
        return Err(CircuitError::OutOfRange {
            what: "power exponent",
            value: t as usize,
            min: 0,
            max: MAX_POWER_EXPONENT as usize,
        });
    }
    if t == 0 {
        return Ok(u.clone());
    }
    Ok(match u {
        BlockUnitary::Diagonal(d) => {
            let scale = (1u64 << t) as f64;
            BlockUnitary::Diagonal(DiagonalUnitary {
                qubits: d.qubits.clone(),
                phases: d.phases.iter().map(|p| (p * scale).rem_euclid(TAU)).collect(),
            })
        }
        BlockUnitary::Permutation(p) => {
            let mut mapping = p.mapping.clone();
            for _ in 0..t {
                mapping = mapping.iter().map(|&k| mapping[k]).collect();
            }
            BlockUnitary::Permutation(PermutationUnitary {
                qubits: p.qubits.clone(),
                mapping,
            })
        }
    })
}

/// Inputs of the generic phase-estimation skeleton.
///
/// `eigen_prep` and `unitary` are expressed in eigen-register-local qubit
/// indices (`0..eigen_size`).
#[derive(Clone, Debug)]
pub struct PhaseEstimationSpec {
    pub unit_bits: usize,
    pub eigen_size: usize,
    pub eigen_prep: Circuit,
    pub unitary: BlockUnitary,
}

/// Builds the phase-estimation circuit.
///
/// Layout: unit register on qubits `0..m` (register `"unit"`), eigen
/// register on `m..m+eigen_size` (register `"eigen"`). Unit qubit `t`
/// controls `unitary^(2^t)`; the unit register is then passed through the
/// inverse QFT and measured into classical bits `0..m`.
pub fn phase_estimation(spec: &PhaseEstimationSpec) -> Result<Circuit, CircuitError> {
    let m = spec.unit_bits;
    if !(1..=MAX_QFT_QUBITS).contains(&m) {
        return Err(CircuitError::OutOfRange {
            what: "unit register bits",
            value: m,
            min: 1,
            max: MAX_QFT_QUBITS,
        });
    }
    if spec.eigen_size == 0 {
        return Err(CircuitError::OutOfRange {
            what: "eigen register size",
            value: 0,
            min: 1,
            max: usize::MAX,
        });
    }
    if let Some(&q) = spec.unitary.qubits().iter().find(|&&q| q >= spec.eigen_size) {
        return Err(CircuitError::OutsideEigenRegister {
            qubit: q,
            size: spec.eigen_size,
        });
    }
    if spec.eigen_prep.has_measurement() {
        return Err(CircuitError::NotInvertible);
    }
    let n = m + spec.eigen_size;
    let unit: Vec<usize> = (0..m).collect();
    let eigen: Vec<usize> = (m..n).collect();

    let mut c = Circuit::new(n, m);
    c.add_register("unit", 0, m).add_register("eigen", m, spec.eigen_size);
    for &q in &unit {
        c.h(q);
    }
    c.compose(&spec.eigen_prep, &eigen)?;
    c.barrier(0..n);
    for t in 0..m {
        let power = powers_of_unitary(&spec.unitary, t as u32)?;
        c.push(Gate::Controlled {
            controls: vec![t],
            gate: Box::new(power.to_gate().map_qubits(&|q| q + m)),
        });
    }
    c.barrier(0..n);
    c.compose(&inverse_qft(m)?, &unit)?;
    c.measure(unit.clone(), unit);
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn qft_of_one_qubit_is_hadamard() {
        assert_eq!(qft(1).unwrap().ops(), &[Gate::Hadamard(0)]);
        assert_eq!(inverse_qft(1).unwrap().ops(), &[Gate::Hadamard(0)]);
    }

    #[test]
    fn qft_rejects_out_of_range() {
        assert!(qft(0).is_err());
        assert!(qft(MAX_QFT_QUBITS + 1).is_err());
    }

    #[test]
    fn diagonal_power_scales_phases() {
        let u = BlockUnitary::Diagonal(DiagonalUnitary {
            qubits: vec![0],
            phases: vec![0.0, FRAC_PI_4],
        });
        assert_eq!(powers_of_unitary(&u, 0).unwrap(), u);
        match powers_of_unitary(&u, 2).unwrap() {
            BlockUnitary::Diagonal(d) => {
                assert_eq!(d.phases[0], 0.0);
                assert!((d.phases[1] - PI).abs() < 1e-15);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(powers_of_unitary(&u, 13).is_err());
    }

    #[test]
    fn permutation_power_of_times_seven_mod_fifteen() {
        // y -> 7y mod 15 on 4 qubits, identity on 15
        let mapping: Vec<usize> = (0..16).map(|y| if y < 15 { 7 * y % 15 } else { y }).collect();
        let u = BlockUnitary::Permutation(PermutationUnitary {
            qubits: vec![0, 1, 2, 3],
            mapping,
        });
        let expected: Vec<usize> = (0..16).map(|y| if y < 15 { 4 * y % 15 } else { y }).collect();
        match powers_of_unitary(&u, 1).unwrap() {
            BlockUnitary::Permutation(p) => assert_eq!(p.mapping, expected),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn phase_estimation_layout() {
        let mut prep = Circuit::new(1, 0);
        prep.x(0);
        let spec = PhaseEstimationSpec {
            unit_bits: 2,
            eigen_size: 1,
            eigen_prep: prep,
            unitary: BlockUnitary::Diagonal(DiagonalUnitary {
                qubits: vec![0],
                phases: vec![0.0, PI],
            }),
        };
        let c = phase_estimation(&spec).unwrap();
        assert_eq!(c.n_qubits(), 3);
        assert_eq!(c.n_clbits(), 2);
        assert_eq!(c.register("unit").unwrap().range(), 0..2);
        assert_eq!(c.register("eigen").unwrap().range(), 2..3);
        assert_eq!(&c.ops()[..3], &[Gate::Hadamard(0), Gate::Hadamard(1), Gate::PauliX(2)]);
        assert_eq!(c.measurements(), vec![(0, 0), (1, 1)]);
        c.validate().unwrap();
    }

    #[test]
    fn phase_estimation_rejects_unitary_outside_eigen_register() {
        let spec = PhaseEstimationSpec {
            unit_bits: 2,
            eigen_size: 1,
            eigen_prep: Circuit::new(1, 0),
            unitary: BlockUnitary::Diagonal(DiagonalUnitary {
                qubits: vec![1],
                phases: vec![0.0, PI],
            }),
        };
        assert!(matches!(
            phase_estimation(&spec),
            Err(CircuitError::OutsideEigenRegister { qubit: 1, size: 1 })
        ));
    }
}
