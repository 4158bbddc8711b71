//! Hybrid factoring: classical pre-checks, period finding by phase
//! estimation of modular multiplication, continued-fraction post-processing.
//!
//! Register names: the measured counting register is called `"work"` and the
//! modular register `"control"`; each carries the conventional name
//! (`"counting"`, `"modular"`) as its alias.

use std::fmt::Display;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{
    phase_estimation, BlockUnitary, Circuit, CircuitError, PermutationUnitary, PhaseEstimationSpec, MAX_QFT_QUBITS,
};
use crate::rng::Seed;
use crate::sim::{self, Histogram, SimError};

pub const DEFAULT_N: u64 = 15;
pub const DEFAULT_MAX_ATTEMPTS: u32 = 10;
pub const DEFAULT_SHOTS: u64 = 4000;
pub const MAX_COUNTING_BITS: usize = 11;

const DRAW_STREAM: u64 = 0x73686f72;

#[derive(Debug, Error)]
pub enum ShorError {
    #[error("gcd(0, 0) is undefined")]
    GcdZero,
    #[error("N = {0} is too small to factor")]
    TooSmall(u64),
    #[error("N = {0} is even; 2 is a factor")]
    Even(u64),
    #[error("N = {0} is prime, not composite")]
    Prime(u64),
    #[error("N = {n} = {base}^{exponent} is a prime power")]
    PrimePower { n: u64, base: u64, exponent: u32 },
    #[error("a = {a} must satisfy 1 < a < N = {n} and gcd(a, N) = 1")]
    BadBase { a: u64, n: u64 },
    #[error("counting register of {0} qubits is outside 1..={MAX_COUNTING_BITS}")]
    CountingBits(usize),
    #[error("period circuit needs {0} qubits, more than the simulator supports")]
    TooLarge(usize),
    #[error("shots and max_attempts must be positive")]
    ZeroBudget,
    #[error("no factors after {} attempts", .0.attempts.len())]
    Exhausted(Box<ShorTrace>),
    #[error("backend failure: {0}")]
    Backend(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// Euclid's algorithm.
pub fn gcd(a: u64, b: u64) -> Result<u64, ShorError> {
    if a == 0 && b == 0 {
        return Err(ShorError::GcdZero);
    }
    let (mut a, mut b) = (a, b);
    while b != 0 {
        (a, b) = (b, a % b);
    }
    Ok(a)
}

fn gcd_nz(a: u64, b: u64) -> u64 {
    gcd(a, b).expect("operand is nonzero")
}

/// `base^exp mod modulus`
pub fn modpow(base: u64, exp: u64, modulus: u64) -> u64 {
    if modulus == 1 {
        return 0;
    }
    let m = modulus as u128;
    let (mut result, mut b, mut e) = (1u128, base as u128 % m, exp);
    while e > 0 {
        if e & 1 == 1 {
            result = result * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    result as u64
}

/// Smallest `r ≥ 1` with `a^r ≡ 1 (mod n)`, by repeated multiplication.
pub fn classical_order_oracle(a: u64, n: u64) -> Result<u64, ShorError> {
    if !(a > 1 && a < n) || gcd_nz(a, n) != 1 {
        return Err(ShorError::BadBase { a, n });
    }
    let (mut x, mut r) = (a % n, 1);
    while x != 1 {
        x = (x as u128 * a as u128 % n as u128) as u64;
        r += 1;
    }
    Ok(r)
}

fn is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

/// `Some((base, exponent))` if `n = base^exponent` with `exponent ≥ 2` and a prime base.
fn prime_power(n: u64) -> Option<(u64, u32)> {
    let max_exp = 64 - n.leading_zeros();
    for k in 2..=max_exp {
        let root = (n as f64).powf(1.0 / k as f64).round() as u64;
        for b in root.saturating_sub(1)..=root + 1 {
            if b >= 2 && b.checked_pow(k) == Some(n) && is_prime(b) {
                return Some((b, k));
            }
        }
    }
    None
}

/// Rejects inputs the quantum subroutine cannot help with.
pub fn precheck(n: u64) -> Result<(), ShorError> {
    if n < 3 {
        return Err(ShorError::TooSmall(n));
    }
    if n.is_multiple_of(2) {
        return Err(ShorError::Even(n));
    }
    if is_prime(n) {
        return Err(ShorError::Prime(n));
    }
    if let Some((base, exponent)) = prime_power(n) {
        return Err(ShorError::PrimePower { n, base, exponent });
    }
    Ok(())
}

/// ⌈log2 n⌉ qubits hold residues mod `n`.
pub fn work_size(n: u64) -> usize {
    (64 - n.saturating_sub(1).leading_zeros()) as usize
}

/// 3 for N = 15, otherwise 2⌈log2 N⌉ − 1 capped at [`MAX_COUNTING_BITS`].
pub fn default_counting_bits(n: u64) -> usize {
    if n == 15 {
        3
    } else {
        (2 * work_size(n)).saturating_sub(1).clamp(1, MAX_COUNTING_BITS)
    }
}

/// `y ↦ a·y mod n` for `y < n`, identity above.
pub fn modular_multiplication(a: u64, n: u64) -> Result<PermutationUnitary, ShorError> {
    if !(a > 1 && a < n) || gcd_nz(a, n) != 1 {
        return Err(ShorError::BadBase { a, n });
    }
    let k = work_size(n);
    let mapping = (0..1u64 << k)
        .map(|y| if y < n { (a * y % n) as usize } else { y as usize })
        .collect();
    Ok(PermutationUnitary {
        qubits: (0..k).collect(),
        mapping,
    })
}

/// Period-finding circuit for `a` mod `n` with an `m`-qubit counting register.
///
/// Counting qubits `0..m` are measured into classical bits `0..m`; the
/// modular register starts in |1⟩.
pub fn build_period_circuit(n: u64, a: u64, m: usize) -> Result<Circuit, ShorError> {
    if !(1..=MAX_COUNTING_BITS.min(MAX_QFT_QUBITS)).contains(&m) {
        return Err(ShorError::CountingBits(m));
    }
    let unitary = modular_multiplication(a, n)?;
    let k = work_size(n);
    if m + k > sim::MAX_QUBITS {
        return Err(ShorError::TooLarge(m + k));
    }
    let mut prep = Circuit::new(k, 0);
    prep.x(0);
    let mut c = phase_estimation(&PhaseEstimationSpec {
        unit_bits: m,
        eigen_size: k,
        eigen_prep: prep,
        unitary: BlockUnitary::Permutation(unitary),
    })?;
    c.rename_register("unit", "work", Some("counting"))
        .rename_register("eigen", "control", Some("modular"));
    Ok(c)
}

/// Continued-fraction expansion of `num/den` as convergents `(p, q)`.
fn convergents(num: u64, den: u64) -> Vec<(u64, u64)> {
    let (mut num, mut den) = (num, den);
    let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
    let mut out = Vec::new();
    while den != 0 {
        let a = num / den;
        (num, den) = (den, num % den);
        let (p, q) = (a * p1 + p0, a * q1 + q0);
        out.push((p, q));
        (p0, q0, p1, q1) = (p1, q1, p, q);
    }
    out
}

/// Candidate and validated period read from one counting-register outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PeriodEstimate {
    pub candidate: Option<u64>,
    pub validated: Option<u64>,
}

/// Reads `y/2^m` through continued fractions.
///
/// The candidate is the denominator of the last convergent below `n`; it and
/// then its multiples below `n` are checked against `a^r ≡ 1 (mod n)`.
pub fn estimate_period(y: u64, m: usize, n: u64, a: u64) -> PeriodEstimate {
    if y == 0 || m >= 64 || y >= 1 << m {
        return PeriodEstimate {
            candidate: None,
            validated: None,
        };
    }
    let candidate = convergents(y, 1 << m)
        .into_iter()
        .map(|(_, q)| q)
        .rfind(|&q| q > 0 && q < n);
    let validated = candidate.and_then(|q| {
        (1..)
            .map(|k| k * q)
            .take_while(|&r| r < n)
            .find(|&r| modpow(a, r, n) == 1)
    });
    PeriodEstimate { candidate, validated }
}

/// The validated period for outcome `y`, or `None` to reject it.
pub fn extract_period(y: u64, m: usize, n: u64, a: u64) -> Option<u64> {
    estimate_period(y, m, n, a).validated
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Disposition {
    /// `gcd(a, N) > 1` already splits N.
    Shortcut,
    PeriodOk,
    /// No nonzero outcome produced a validated period.
    YRejected,
    ROdd,
    /// `a^{r/2} ≡ −1 (mod N)`.
    RTrivial,
    /// `a^{r/2} ≡ 1 (mod N)`: both gcds are trivial.
    PowerFails,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShorAttempt {
    pub a: u64,
    pub gcd_shortcut: Option<u64>,
    pub histogram: Option<Histogram>,
    pub y_used: Option<u64>,
    pub r_candidate: Option<u64>,
    pub r_validated: Option<u64>,
    pub disposition: Disposition,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ShorTrace {
    pub n: u64,
    pub counting_bits: usize,
    pub attempts: Vec<ShorAttempt>,
    pub factors: Option<(u64, u64)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShorProblem {
    pub n: u64,
    pub counting_bits: usize,
    pub max_attempts: u32,
    pub shots: u64,
}

impl ShorProblem {
    pub fn new(n: u64) -> Self {
        ShorProblem {
            n,
            counting_bits: if n >= 2 { default_counting_bits(n) } else { 1 },
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            shots: DEFAULT_SHOTS,
        }
    }

    pub fn work_size(&self) -> usize {
        work_size(self.n)
    }

    pub fn validate(&self) -> Result<(), ShorError> {
        precheck(self.n)?;
        if !(1..=MAX_COUNTING_BITS).contains(&self.counting_bits) {
            return Err(ShorError::CountingBits(self.counting_bits));
        }
        let qubits = self.counting_bits + self.work_size();
        if qubits > sim::MAX_QUBITS {
            return Err(ShorError::TooLarge(qubits));
        }
        if self.shots == 0 || self.max_attempts == 0 {
            return Err(ShorError::ZeroBudget);
        }
        Ok(())
    }
}

fn split_with_period(a: u64, r: u64, n: u64) -> (Disposition, Option<(u64, u64)>) {
    if r % 2 == 1 {
        return (Disposition::ROdd, None);
    }
    let x = modpow(a, r / 2, n);
    if x == n - 1 {
        return (Disposition::RTrivial, None);
    }
    for f in [gcd_nz((x + n - 1) % n, n), gcd_nz(x + 1, n)] {
        if f > 1 && f < n {
            return (Disposition::PeriodOk, Some(ordered(f, n / f)));
        }
    }
    (Disposition::PowerFails, None)
}

fn ordered(p: u64, q: u64) -> (u64, u64) {
    (p.min(q), p.max(q))
}

/// Runs the hybrid loop, executing each period circuit through `run`.
///
/// `run(circuit, shots, seed)` stands for any backend; its error text is
/// carried in [`ShorError::Backend`].
pub fn shor_factor<F, E>(problem: &ShorProblem, seed: Seed, mut run: F) -> Result<ShorTrace, ShorError>
where
    F: FnMut(&Circuit, u64, Seed) -> Result<Histogram, E>,
    E: Display,
{
    problem.validate()?;
    let n = problem.n;
    let m = problem.counting_bits;
    let mut rng = seed.rng(DRAW_STREAM);
    let mut trace = ShorTrace {
        n,
        counting_bits: m,
        ..ShorTrace::default()
    };

    for _ in 0..problem.max_attempts {
        let a = rng.random_range(2..n);
        let shot_seed = Seed(rng.random());
        let g = gcd_nz(a, n);
        if g > 1 {
            trace.attempts.push(ShorAttempt {
                a,
                gcd_shortcut: Some(g),
                histogram: None,
                y_used: None,
                r_candidate: None,
                r_validated: None,
                disposition: Disposition::Shortcut,
            });
            trace.factors = Some(ordered(g, n / g));
            return Ok(trace);
        }

        let circuit = build_period_circuit(n, a, m)?;
        let h = run(&circuit, problem.shots, shot_seed).map_err(|e| ShorError::Backend(e.to_string()))?;
        let mut attempt = ShorAttempt {
            a,
            gcd_shortcut: None,
            histogram: None,
            y_used: None,
            r_candidate: None,
            r_validated: None,
            disposition: Disposition::YRejected,
        };
        for (y, _) in h.ranked().into_iter().filter(|&(y, _)| y != 0) {
            let est = estimate_period(y, m, n, a);
            attempt.y_used = Some(y);
            attempt.r_candidate = est.candidate;
            if let Some(r) = est.validated {
                attempt.r_validated = Some(r);
                let (disposition, factors) = split_with_period(a, r, n);
                attempt.disposition = disposition;
                trace.factors = factors;
                break;
            }
        }
        attempt.histogram = Some(h);
        trace.attempts.push(attempt);
        if trace.factors.is_some() {
            return Ok(trace);
        }
    }
    Err(ShorError::Exhausted(Box::new(trace)))
}

/// [`shor_factor`] on the noise-free simulator.
pub fn shor_factor_ideal(problem: &ShorProblem, seed: Seed) -> Result<ShorTrace, ShorError> {
    shor_factor(problem, seed, |c: &Circuit, shots, s| -> Result<Histogram, SimError> {
        sim::run_ideal(c, shots, s)
    })
}
