//! Circuit representation: gate vocabulary, register views and structural
//! validation.
//!
//! Qubit 0 is the least-significant bit of a basis-state index. Multi-qubit
//! payloads (`DiagonalUnitary`, `PermutationUnitary`) use the same rule over
//! their own qubit list: `qubits[0]` is the low bit of the local index.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

mod builders;
mod json;

pub use builders::{
    inverse_qft, phase_estimation, powers_of_unitary, qft, BlockUnitary, PhaseEstimationSpec, MAX_POWER_EXPONENT,
    MAX_QFT_QUBITS,
};
pub use json::{CircuitDocument, OpDocument, CIRCUIT_FORMAT_VERSION};

pub type Matrix2 = [[Complex64; 2]; 2];

const UNITARY_TOL: f64 = 1e-10;

/// Phase gate on a subset of qubits: `phases[k]` is applied to local index `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalUnitary {
    pub qubits: Vec<usize>,
    pub phases: Vec<f64>,
}

/// Basis-state permutation on a subset of qubits: local index `k` is sent to
/// `mapping[k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PermutationUnitary {
    pub qubits: Vec<usize>,
    pub mapping: Vec<usize>,
}

impl PermutationUnitary {
    pub fn is_bijection(&self) -> bool {
        let n = self.mapping.len();
        let mut seen = vec![false; n];
        for &m in &self.mapping {
            if m >= n || seen[m] {
                return false;
            }
            seen[m] = true;
        }
        true
    }

    pub fn inverse_mapping(&self) -> Vec<usize> {
        let mut inv = vec![0; self.mapping.len()];
        for (k, &m) in self.mapping.iter().enumerate() {
            inv[m] = k;
        }
        inv
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    Hadamard(usize),
    PauliX(usize),
    PauliZ(usize),
    Phase {
        target: usize,
        angle: f64,
    },
    Unitary1Q {
        target: usize,
        matrix: Matrix2,
    },
    /// Applies `gate` when every control qubit is |1⟩.
    Controlled {
        controls: Vec<usize>,
        gate: Box<Gate>,
    },
    MultiControlledZ {
        controls: Vec<usize>,
        target: usize,
    },
    Swap(usize, usize),
    Diagonal(DiagonalUnitary),
    Permutation(PermutationUnitary),
    Measure {
        qubits: Vec<usize>,
        clbits: Vec<usize>,
    },
    Barrier(Vec<usize>),
}

impl Gate {
    /// Short lowercase tag, also used as the `kind` field of the JSON form.
    pub fn kind(&self) -> &'static str {
        match self {
            Gate::Hadamard(_) => "h",
            Gate::PauliX(_) => "x",
            Gate::PauliZ(_) => "z",
            Gate::Phase { .. } => "phase",
            Gate::Unitary1Q { .. } => "unitary1q",
            Gate::Controlled { .. } => "controlled",
            Gate::MultiControlledZ { .. } => "mcz",
            Gate::Swap(..) => "swap",
            Gate::Diagonal(_) => "diagonal",
            Gate::Permutation(_) => "permutation",
            Gate::Measure { .. } => "measure",
            Gate::Barrier(_) => "barrier",
        }
    }

    /// Every qubit the operation touches, controls first.
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::Hadamard(q) | Gate::PauliX(q) | Gate::PauliZ(q) => vec![*q],
            Gate::Phase { target, .. } | Gate::Unitary1Q { target, .. } => vec![*target],
            Gate::Controlled { controls, gate } => {
                let mut qs = controls.clone();
                qs.extend(gate.qubits());
                qs
            }
            Gate::MultiControlledZ { controls, target } => {
                let mut qs = controls.clone();
                qs.push(*target);
                qs
            }
            Gate::Swap(a, b) => vec![*a, *b],
            Gate::Diagonal(d) => d.qubits.clone(),
            Gate::Permutation(p) => p.qubits.clone(),
            Gate::Measure { qubits, .. } | Gate::Barrier(qubits) => qubits.clone(),
        }
    }

    pub fn is_measurement(&self) -> bool {
        matches!(self, Gate::Measure { .. })
    }

    /// True for operations that act on the state (everything except
    /// measurements and barriers).
    pub fn is_unitary(&self) -> bool {
        !matches!(self, Gate::Measure { .. } | Gate::Barrier(_))
    }

    /// Conjugate transpose. `None` for measurements.
    pub fn adjoint(&self) -> Option<Gate> {
        let g = match self {
            Gate::Hadamard(_) | Gate::PauliX(_) | Gate::PauliZ(_) | Gate::Swap(..) => self.clone(),
            Gate::MultiControlledZ { .. } | Gate::Barrier(_) => self.clone(),
            Gate::Phase { target, angle } => Gate::Phase {
                target: *target,
                angle: -angle,
            },
            Gate::Unitary1Q { target, matrix } => Gate::Unitary1Q {
                target: *target,
                matrix: [
                    [matrix[0][0].conj(), matrix[1][0].conj()],
                    [matrix[0][1].conj(), matrix[1][1].conj()],
                ],
            },
            Gate::Controlled { controls, gate } => Gate::Controlled {
                controls: controls.clone(),
                gate: Box::new(gate.adjoint()?),
            },
            Gate::Diagonal(d) => Gate::Diagonal(DiagonalUnitary {
                qubits: d.qubits.clone(),
                phases: d.phases.iter().map(|p| -p).collect(),
            }),
            Gate::Permutation(p) => Gate::Permutation(PermutationUnitary {
                qubits: p.qubits.clone(),
                mapping: p.inverse_mapping(),
            }),
            Gate::Measure { .. } => return None,
        };
        Some(g)
    }

    /// Rewrites every qubit index through `f`. Classical bits are untouched.
    pub fn map_qubits(&self, f: &impl Fn(usize) -> usize) -> Gate {
        let all = |qs: &[usize]| qs.iter().map(|&q| f(q)).collect::<Vec<_>>();
        match self {
            Gate::Hadamard(q) => Gate::Hadamard(f(*q)),
            Gate::PauliX(q) => Gate::PauliX(f(*q)),
            Gate::PauliZ(q) => Gate::PauliZ(f(*q)),
            Gate::Phase { target, angle } => Gate::Phase {
                target: f(*target),
                angle: *angle,
            },
            Gate::Unitary1Q { target, matrix } => Gate::Unitary1Q {
                target: f(*target),
                matrix: *matrix,
            },
            Gate::Controlled { controls, gate } => Gate::Controlled {
                controls: all(controls),
                gate: Box::new(gate.map_qubits(f)),
            },
            Gate::MultiControlledZ { controls, target } => Gate::MultiControlledZ {
                controls: all(controls),
                target: f(*target),
            },
            Gate::Swap(a, b) => Gate::Swap(f(*a), f(*b)),
            Gate::Diagonal(d) => Gate::Diagonal(DiagonalUnitary {
                qubits: all(&d.qubits),
                phases: d.phases.clone(),
            }),
            Gate::Permutation(p) => Gate::Permutation(PermutationUnitary {
                qubits: all(&p.qubits),
                mapping: p.mapping.clone(),
            }),
            Gate::Measure { qubits, clbits } => Gate::Measure {
                qubits: all(qubits),
                clbits: clbits.clone(),
            },
            Gate::Barrier(qs) => Gate::Barrier(all(qs)),
        }
    }

    /// Structural problems of this gate alone on an `n_qubits` register:
    /// index range, repeated qubits and payload well-formedness.
    pub fn violations(&self, n_qubits: usize) -> Vec<Violation> {
        let mut out = Vec::new();
        self.local_violations(0, n_qubits, &mut out);
        out
    }

    fn local_violations(&self, op: usize, n_qubits: usize, out: &mut Vec<Violation>) {
        let mut seen = BTreeSet::new();
        for q in self.qubits() {
            if q >= n_qubits {
                out.push(Violation::QubitOutOfRange { op, qubit: q });
            }
            if !seen.insert(q) {
                out.push(Violation::RepeatedQubit { op, qubit: q });
            }
        }
        self.payload_violations(op, out);
    }

    fn payload_violations(&self, op: usize, out: &mut Vec<Violation>) {
        match self {
            Gate::Unitary1Q { matrix, .. } if !is_unitary2(matrix) => {
                out.push(Violation::NotUnitary { op });
            }
            Gate::Diagonal(d) => {
                let expected = 1usize.checked_shl(d.qubits.len() as u32).unwrap_or(0);
                if d.phases.len() != expected {
                    out.push(Violation::PhaseCount {
                        op,
                        expected,
                        found: d.phases.len(),
                    });
                }
            }
            Gate::Permutation(p) => {
                let expected = 1usize.checked_shl(p.qubits.len() as u32).unwrap_or(0);
                if p.mapping.len() != expected || !p.is_bijection() {
                    out.push(Violation::NotBijection { op });
                }
            }
            Gate::Controlled { gate, .. } => {
                if matches!(
                    **gate,
                    Gate::Controlled { .. } | Gate::Measure { .. } | Gate::Barrier(_)
                ) {
                    out.push(Violation::BadControlledPayload { op });
                } else {
                    gate.payload_violations(op, out);
                }
            }
            Gate::Measure { qubits, clbits } if qubits.len() != clbits.len() || qubits.is_empty() => {
                out.push(Violation::MeasureArity {
                    op,
                    qubits: qubits.len(),
                    clbits: clbits.len(),
                });
            }
            _ => {}
        }
    }
}

fn is_unitary2(m: &Matrix2) -> bool {
    // M†M == I
    for i in 0..2 {
        for j in 0..2 {
            let v: Complex64 = (0..2).map(|k| m[k][i].conj() * m[k][j]).sum();
            let expect = if i == j { 1.0 } else { 0.0 };
            if (v - expect).norm() > UNITARY_TOL {
                return false;
            }
        }
    }
    true
}

/// A named, contiguous slice of the qubit register.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegisterView {
    pub start: usize,
    pub len: usize,
    /// Secondary name for the same qubits, e.g. the textbook term where the
    /// primary name follows another convention.
    pub alias: Option<String>,
}

impl RegisterView {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    QubitOutOfRange { op: usize, qubit: usize },
    ClbitOutOfRange { op: usize, clbit: usize },
    RepeatedQubit { op: usize, qubit: usize },
    ClbitReused { op: usize, clbit: usize },
    MeasureArity { op: usize, qubits: usize, clbits: usize },
    GateAfterMeasure { op: usize, qubit: usize },
    NotUnitary { op: usize },
    NotBijection { op: usize },
    PhaseCount { op: usize, expected: usize, found: usize },
    BadControlledPayload { op: usize },
    RegisterOutOfRange { name: String },
    RegisterOverlap { first: String, second: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::QubitOutOfRange { op, qubit } => {
                write!(f, "op {op}: qubit {qubit} out of range")
            }
            Violation::ClbitOutOfRange { op, clbit } => {
                write!(f, "op {op}: classical bit {clbit} out of range")
            }
            Violation::RepeatedQubit { op, qubit } => {
                write!(f, "op {op}: qubit {qubit} used more than once")
            }
            Violation::ClbitReused { op, clbit } => {
                write!(f, "op {op}: classical bit {clbit} written more than once")
            }
            Violation::MeasureArity { op, qubits, clbits } => write!(
                f,
                "op {op}: measurement maps {qubits} qubits to {clbits} classical bits"
            ),
            Violation::GateAfterMeasure { op, qubit } => {
                write!(f, "op {op}: qubit {qubit} is used after being measured")
            }
            Violation::NotUnitary { op } => write!(f, "op {op}: matrix is not unitary"),
            Violation::NotBijection { op } => write!(f, "op {op}: mapping is not a bijection"),
            Violation::PhaseCount { op, expected, found } => {
                write!(f, "op {op}: expected {expected} phases, found {found}")
            }
            Violation::BadControlledPayload { op } => {
                write!(f, "op {op}: controlled payload must be a plain unitary gate")
            }
            Violation::RegisterOutOfRange { name } => {
                write!(f, "register '{name}' extends past the last qubit")
            }
            Violation::RegisterOverlap { first, second } => {
                write!(f, "registers '{first}' and '{second}' overlap")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("invalid circuit: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("{what} = {value} is outside {min}..={max}")]
    OutOfRange {
        what: &'static str,
        value: usize,
        min: usize,
        max: usize,
    },
    #[error("circuit contains measurements and has no inverse")]
    NotInvertible,
    #[error("fragment has {fragment} qubits but {mapped} target qubits were given")]
    FragmentSize { fragment: usize, mapped: usize },
    #[error("unitary acts on local qubit {qubit}, outside the {size}-qubit eigen register")]
    OutsideEigenRegister { qubit: usize, size: usize },
    #[error("circuit document: {0}")]
    Document(String),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Ordered gate program over `n_qubits` qubits and `n_clbits` classical bits.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    n_clbits: usize,
    ops: Vec<Gate>,
    registers: BTreeMap<String, RegisterView>,
}

impl Circuit {
    pub fn new(n_qubits: usize, n_clbits: usize) -> Self {
        Circuit {
            n_qubits,
            n_clbits,
            ops: Vec::new(),
            registers: BTreeMap::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_clbits(&self) -> usize {
        self.n_clbits
    }

    pub fn ops(&self) -> &[Gate] {
        &self.ops
    }

    pub fn registers(&self) -> &BTreeMap<String, RegisterView> {
        &self.registers
    }

    pub fn register(&self, name: &str) -> Option<&RegisterView> {
        self.registers.get(name)
    }

    pub fn add_register(&mut self, name: impl Into<String>, start: usize, len: usize) -> &mut Self {
        self.registers.insert(
            name.into(),
            RegisterView {
                start,
                len,
                alias: None,
            },
        );
        self
    }

    /// Renames a register view and attaches an alias; no-op if `from` is absent.
    pub fn rename_register(&mut self, from: &str, to: &str, alias: Option<&str>) -> &mut Self {
        if let Some(mut view) = self.registers.remove(from) {
            view.alias = alias.map(str::to_owned);
            self.registers.insert(to.to_owned(), view);
        }
        self
    }

    pub fn push(&mut self, gate: Gate) -> &mut Self {
        self.ops.push(gate);
        self
    }

    pub fn h(&mut self, q: usize) -> &mut Self {
        self.push(Gate::Hadamard(q))
    }

    pub fn x(&mut self, q: usize) -> &mut Self {
        self.push(Gate::PauliX(q))
    }

    pub fn z(&mut self, q: usize) -> &mut Self {
        self.push(Gate::PauliZ(q))
    }

    pub fn phase(&mut self, q: usize, angle: f64) -> &mut Self {
        self.push(Gate::Phase { target: q, angle })
    }

    pub fn cphase(&mut self, control: usize, target: usize, angle: f64) -> &mut Self {
        self.push(Gate::Controlled {
            controls: vec![control],
            gate: Box::new(Gate::Phase { target, angle }),
        })
    }

    pub fn swap(&mut self, a: usize, b: usize) -> &mut Self {
        self.push(Gate::Swap(a, b))
    }

    pub fn mcz(&mut self, controls: Vec<usize>, target: usize) -> &mut Self {
        self.push(Gate::MultiControlledZ { controls, target })
    }

    pub fn barrier(&mut self, qubits: impl IntoIterator<Item = usize>) -> &mut Self {
        self.push(Gate::Barrier(qubits.into_iter().collect()))
    }

    pub fn measure(&mut self, qubits: Vec<usize>, clbits: Vec<usize>) -> &mut Self {
        self.push(Gate::Measure { qubits, clbits })
    }

    /// Measures qubit `i` into classical bit `i` for every qubit.
    pub fn measure_all(&mut self) -> &mut Self {
        let qs: Vec<usize> = (0..self.n_qubits).collect();
        self.measure(qs.clone(), qs)
    }

    /// Appends `fragment`, sending its qubit `i` to `targets[i]`. Fragment
    /// registers are not carried over.
    pub fn compose(&mut self, fragment: &Circuit, targets: &[usize]) -> Result<&mut Self, CircuitError> {
        if fragment.n_qubits != targets.len() {
            return Err(CircuitError::FragmentSize {
                fragment: fragment.n_qubits,
                mapped: targets.len(),
            });
        }
        let map = |q: usize| targets[q];
        for op in &fragment.ops {
            self.ops.push(op.map_qubits(&map));
        }
        Ok(self)
    }

    /// The adjoint circuit: reversed order, each gate conjugate-transposed.
    pub fn inverse(&self) -> Result<Circuit, CircuitError> {
        let ops = self
            .ops
            .iter()
            .rev()
            .map(|g| g.adjoint().ok_or(CircuitError::NotInvertible))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Circuit {
            n_qubits: self.n_qubits,
            n_clbits: self.n_clbits,
            ops,
            registers: self.registers.clone(),
        })
    }

    pub fn has_measurement(&self) -> bool {
        self.ops.iter().any(Gate::is_measurement)
    }

    /// `(qubit, clbit)` pairs in program order.
    pub fn measurements(&self) -> Vec<(usize, usize)> {
        self.ops
            .iter()
            .filter_map(|g| match g {
                Gate::Measure { qubits, clbits } => Some(qubits.iter().copied().zip(clbits.iter().copied())),
                _ => None,
            })
            .flatten()
            .collect()
    }

    /// Number of state-changing operations.
    pub fn gate_count(&self) -> usize {
        self.ops.iter().filter(|g| g.is_unitary()).count()
    }

    /// Every invariant violation, in op order followed by register checks.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut measured: BTreeSet<usize> = BTreeSet::new();
        let mut written: BTreeSet<usize> = BTreeSet::new();
        for (op, gate) in self.ops.iter().enumerate() {
            let qubits = gate.qubits();
            gate.local_violations(op, self.n_qubits, &mut out);
            if !matches!(gate, Gate::Barrier(_)) {
                for &q in &qubits {
                    if measured.contains(&q) {
                        out.push(Violation::GateAfterMeasure { op, qubit: q });
                    }
                }
            }
            if let Gate::Measure { qubits, clbits } = gate {
                for &c in clbits {
                    if c >= self.n_clbits {
                        out.push(Violation::ClbitOutOfRange { op, clbit: c });
                    }
                    if !written.insert(c) {
                        out.push(Violation::ClbitReused { op, clbit: c });
                    }
                }
                measured.extend(qubits.iter().copied());
            }
        }
        let regs: Vec<_> = self.registers.iter().collect();
        for (i, (name, view)) in regs.iter().enumerate() {
            if view.start + view.len > self.n_qubits {
                out.push(Violation::RegisterOutOfRange { name: (*name).clone() });
            }
            for (other, oview) in &regs[i + 1..] {
                let overlap = view.start < oview.start + oview.len && oview.start < view.start + view.len;
                if overlap && view.len > 0 && oview.len > 0 {
                    out.push(Violation::RegisterOverlap {
                        first: (*name).clone(),
                        second: (*other).clone(),
                    });
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), CircuitError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(CircuitError::Invalid(v))
        }
    }
}
