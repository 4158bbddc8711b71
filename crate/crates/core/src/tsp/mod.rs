//! Four-node travelling-salesman phase estimation.
//!
//! A tour is encoded by each node's predecessor: for node `j` the 2-bit
//! value `i(j) − 1` is written big-endian, pairs concatenated for
//! `j = 1..4` with the leftmost pair belonging to node 1. The tour unitary is
//! diagonal in that basis and multiplies a tour's eigenstate by
//! `exp(i·s·λ·length)`, so phase estimation reads the tour length.

mod export;

use std::f64::consts::{PI, TAU};
use std::fmt;

use itertools::Itertools;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{
    phase_estimation, BlockUnitary, Circuit, CircuitError, DiagonalUnitary, PhaseEstimationSpec, MAX_QFT_QUBITS,
};
use crate::rng::Seed;
use crate::sim::Histogram;

pub use export::{render_svg, DecodeDocument, EdgeDocument, InstanceDocument, NodeDocument, INSTANCE_FORMAT_VERSION};

/// Nodes handled by the quantum circuits.
pub const CIRCUIT_NODES: usize = 4;
pub const MIN_NODES: usize = 4;
pub const MAX_NODES: usize = 8;
pub const EIGEN_QUBITS: usize = 8;
pub const DEFAULT_UNIT_BITS: usize = 6;
pub const DEFAULT_SHOTS: u64 = 4000;
pub const MAX_UNIT_BITS: usize = MAX_QFT_QUBITS;
/// Fraction of the phase circle the longest conceivable tour may use.
pub const LAMBDA_HEADROOM: f64 = 0.9;
const GRID: u32 = 100;
const MAP_STREAM: u64 = 0x0074_7370;

#[derive(Debug, Error)]
pub enum TspError {
    #[error("{0} nodes is outside {MIN_NODES}..={MAX_NODES}")]
    Nodes(usize),
    #[error("circuits are defined for exactly {CIRCUIT_NODES} nodes, got {0}")]
    CircuitNodes(usize),
    #[error("nodes {0} and {1} share coordinates")]
    Coincident(usize, usize),
    #[error("coordinate of node {0} is not finite")]
    NonFinite(usize),
    #[error("phase scale {0} must be positive and finite")]
    Lambda(f64),
    #[error("phase scale {lambda} wraps a {max_tour}-long tour past 2π")]
    Wraparound { lambda: f64, max_tour: f64 },
    #[error("unit register of {0} qubits is outside 1..={MAX_UNIT_BITS}")]
    UnitBits(usize),
    #[error("invalid tour {0}")]
    InvalidTour(String),
    #[error("invalid eigenstate '{0}'")]
    Eigenstate(String),
    #[error("expected {expected} histograms, got {found}")]
    HistogramCount { expected: usize, found: usize },
    #[error("histogram {index} has {found}-bit keys, expected {expected}")]
    HistogramWidth {
        index: usize,
        found: usize,
        expected: usize,
    },
    #[error("histogram {0} is empty")]
    EmptyHistogram(usize),
    #[error("instance document: {0}")]
    Document(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// Node positions and their Euclidean distance matrix (0-based indices).
#[derive(Clone, Debug, PartialEq)]
pub struct TspInstance {
    seed: Option<Seed>,
    coords: Vec<(f64, f64)>,
    dist: Vec<Vec<f64>>,
}

impl TspInstance {
    pub fn from_coords(coords: Vec<(f64, f64)>) -> Result<Self, TspError> {
        let n = coords.len();
        if !(MIN_NODES..=MAX_NODES).contains(&n) {
            return Err(TspError::Nodes(n));
        }
        if let Some(i) = coords.iter().position(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(TspError::NonFinite(i + 1));
        }
        for (i, j) in (0..n).tuple_combinations() {
            if coords[i] == coords[j] {
                return Err(TspError::Coincident(i + 1, j + 1));
            }
        }
        let dist = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let (dx, dy) = (coords[i].0 - coords[j].0, coords[i].1 - coords[j].1);
                        (dx * dx + dy * dy).sqrt()
                    })
                    .collect()
            })
            .collect();
        Ok(TspInstance {
            seed: None,
            coords,
            dist,
        })
    }

    /// Records the seed the coordinates were drawn from.
    pub fn with_seed(mut self, seed: Seed) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn seed(&self) -> Option<Seed> {
        self.seed
    }

    pub fn n_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[(f64, f64)] {
        &self.coords
    }

    pub fn dist(&self) -> &[Vec<f64>] {
        &self.dist
    }

    /// Longest off-diagonal distance.
    pub fn max_edge(&self) -> f64 {
        self.dist.iter().flatten().copied().fold(0.0, f64::max)
    }

    /// Closed-cycle length of `tour`.
    pub fn tour_distance(&self, tour: &TspTour) -> f64 {
        tour.edges().map(|(a, b)| self.dist[a - 1][b - 1]).sum()
    }

    /// Returns an instance scaled by `c` about the origin.
    pub fn scaled(&self, c: f64) -> Result<Self, TspError> {
        let mut out = TspInstance::from_coords(self.coords.iter().map(|&(x, y)| (x * c, y * c)).collect())?;
        out.seed = self.seed;
        Ok(out)
    }
}

/// Draws `n` distinct points uniformly on the integer grid `[0, 100)²`;
/// coincident draws are redrawn.
pub fn generate_coords(seed: Seed, n: usize) -> Result<Vec<(f64, f64)>, TspError> {
    if !(MIN_NODES..=MAX_NODES).contains(&n) {
        return Err(TspError::Nodes(n));
    }
    let mut rng = seed.rng(MAP_STREAM);
    loop {
        let coords: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.random_range(0..GRID) as f64, rng.random_range(0..GRID) as f64))
            .collect();
        if coords.iter().tuple_combinations().all(|(a, b)| a != b) {
            return Ok(coords);
        }
    }
}

/// [`generate_coords`] plus the distance matrix.
pub fn generate_instance(seed: Seed, n: usize) -> Result<TspInstance, TspError> {
    Ok(TspInstance::from_coords(generate_coords(seed, n)?)?.with_seed(seed))
}

/// A Hamiltonian cycle anchored at node 1, stored without the closing
/// return (`[1, 2, 3, 4]` is the tour 1-2-3-4-1). Nodes are 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct TspTour {
    order: Vec<usize>,
}

impl TryFrom<Vec<usize>> for TspTour {
    type Error = TspError;

    fn try_from(order: Vec<usize>) -> Result<Self, TspError> {
        TspTour::new(order)
    }
}

impl From<TspTour> for Vec<usize> {
    fn from(t: TspTour) -> Self {
        t.order
    }
}

impl TspTour {
    /// Accepts a visit order starting at node 1, optionally closed by a final 1.
    pub fn new(mut order: Vec<usize>) -> Result<Self, TspError> {
        if order.len() > 1 && order.last() == Some(&1) {
            order.pop();
        }
        let n = order.len();
        let bad = || TspError::InvalidTour(format!("{order:?}"));
        if !(MIN_NODES..=MAX_NODES).contains(&n) || order[0] != 1 {
            return Err(bad());
        }
        let mut seen = vec![false; n + 1];
        for &v in &order {
            if v == 0 || v > n || seen[v] {
                return Err(bad());
            }
            seen[v] = true;
        }
        Ok(TspTour { order })
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn n_nodes(&self) -> usize {
        self.order.len()
    }

    /// `pred[j − 1] = i(j)`, the node visited just before node `j`.
    pub fn predecessors(&self) -> Vec<usize> {
        let n = self.order.len();
        let mut pred = vec![0; n];
        for k in 0..n {
            pred[self.order[(k + 1) % n] - 1] = self.order[k];
        }
        pred
    }

    /// Directed edges of the closed cycle.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.order.len();
        (0..n).map(move |k| (self.order[k], self.order[(k + 1) % n]))
    }

    /// Reversal-canonical form: second visited node below the last one.
    pub fn canonical(&self) -> TspTour {
        let n = self.order.len();
        if self.order[1] < self.order[n - 1] {
            self.clone()
        } else {
            let mut order = vec![1];
            order.extend(self.order[1..].iter().rev());
            TspTour { order }
        }
    }

    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for TspTour {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.order {
            write!(f, "{v}-")?;
        }
        write!(f, "1")
    }
}

/// The `(n−1)!/2` reversal-distinct tours, in lexicographic order.
pub fn enumerate_tours(n: usize) -> Result<Vec<TspTour>, TspError> {
    if !(MIN_NODES..=MAX_NODES).contains(&n) {
        return Err(TspError::Nodes(n));
    }
    Ok((2..=n)
        .permutations(n - 1)
        .filter(|p| p[0] < p[n - 2])
        .map(|p| {
            let mut order = vec![1];
            order.extend(p);
            TspTour { order }
        })
        .collect())
}

/// Eight-character predecessor encoding of a four-node tour.
pub fn tour_eigenstate(tour: &TspTour) -> Result<String, TspError> {
    if tour.n_nodes() != CIRCUIT_NODES {
        return Err(TspError::CircuitNodes(tour.n_nodes()));
    }
    Ok(tour.predecessors().iter().map(|&i| format!("{:02b}", i - 1)).collect())
}

/// Inverse of [`tour_eigenstate`].
pub fn tour_from_eigenstate(bits: &str) -> Result<TspTour, TspError> {
    let bad = || TspError::Eigenstate(bits.to_owned());
    if bits.len() != 2 * CIRCUIT_NODES || !bits.chars().all(|c| c == '0' || c == '1') {
        return Err(bad());
    }
    let pred: Vec<usize> = (0..CIRCUIT_NODES)
        .map(|j| usize::from_str_radix(&bits[2 * j..2 * j + 2], 2).unwrap() + 1)
        .collect();
    // successor map: succ[i(j)] = j
    let mut succ = [0; CIRCUIT_NODES + 1];
    for (j, &i) in pred.iter().enumerate() {
        if succ[i] != 0 {
            return Err(bad());
        }
        succ[i] = j + 1;
    }
    let mut order = vec![1];
    while order.len() < CIRCUIT_NODES {
        let next = succ[*order.last().unwrap()];
        if next == 1 {
            return Err(bad());
        }
        order.push(next);
    }
    if succ[*order.last().unwrap()] != 1 {
        return Err(bad());
    }
    TspTour::new(order).map_err(|_| bad())
}

/// Which end of the counting range marks the shortest tour.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// Phases `−λ·d`: the largest reading is the shortest tour.
    #[default]
    Paper,
    /// Phases `+λ·d`: the smallest reading is the shortest tour.
    Natural,
}

impl Convention {
    fn sign(self) -> f64 {
        match self {
            Convention::Paper => -1.0,
            Convention::Natural => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TspEncoding {
    pub unit_bits: usize,
    pub lambda: f64,
    pub convention: Convention,
}

impl TspEncoding {
    /// λ = 2π·0.9 / (4·max_edge): no four-edge tour can wrap.
    pub fn auto(instance: &TspInstance, unit_bits: usize, convention: Convention) -> Self {
        TspEncoding {
            unit_bits,
            lambda: TAU * LAMBDA_HEADROOM / (CIRCUIT_NODES as f64 * instance.max_edge()),
            convention,
        }
    }

    /// Length difference corresponding to one unit of the counting register.
    pub fn quantization_step(&self) -> f64 {
        TAU / ((1u64 << self.unit_bits) as f64 * self.lambda)
    }

    pub fn check(&self, instance: &TspInstance) -> Result<(), TspError> {
        if instance.n_nodes() != CIRCUIT_NODES {
            return Err(TspError::CircuitNodes(instance.n_nodes()));
        }
        if !(1..=MAX_UNIT_BITS).contains(&self.unit_bits) {
            return Err(TspError::UnitBits(self.unit_bits));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(TspError::Lambda(self.lambda));
        }
        let max_tour = enumerate_tours(CIRCUIT_NODES)?
            .iter()
            .map(|t| instance.tour_distance(t))
            .fold(0.0, f64::max);
        if self.lambda * max_tour >= TAU {
            return Err(TspError::Wraparound {
                lambda: self.lambda,
                max_tour,
            });
        }
        Ok(())
    }

    /// Eigenphase of a tour of length `d`, in `[0, 2π)`.
    pub fn phase_of(&self, d: f64) -> f64 {
        (self.convention.sign() * self.lambda * d).rem_euclid(TAU)
    }

    /// Counting-register value nearest to the eigenphase of length `d`.
    pub fn nearest_reading(&self, d: f64) -> u64 {
        let size = 1u64 << self.unit_bits;
        (size as f64 * self.phase_of(d) / TAU).round() as u64 % size
    }

    /// Length estimate for counting-register value `y`.
    pub fn estimate_distance(&self, y: u64) -> f64 {
        let size = 1u64 << self.unit_bits;
        let steps = match self.convention {
            Convention::Paper => (size - y % size) % size,
            Convention::Natural => y % size,
        };
        steps as f64 * self.quantization_step()
    }
}

/// Value of pair `j` (0-based) in an eigen-register index.
fn pair_value(index: usize, j: usize) -> usize {
    (index >> (EIGEN_QUBITS - 2 * (j + 1))) & 3
}

/// Diagonal tour unitary on the eigen register.
///
/// Local index bit 7 is the leftmost eigenstate character, so pair `j`
/// (node `j + 1`) occupies bits `7 − 2j` and `6 − 2j`.
pub fn build_tour_unitary(instance: &TspInstance, enc: &TspEncoding) -> Result<DiagonalUnitary, TspError> {
    enc.check(instance)?;
    let s = enc.convention.sign();
    let phases = (0..1usize << EIGEN_QUBITS)
        .map(|idx| {
            (0..CIRCUIT_NODES)
                .map(|j| s * enc.lambda * instance.dist[pair_value(idx, j)][j])
                .sum::<f64>()
                .rem_euclid(TAU)
        })
        .collect();
    Ok(DiagonalUnitary {
        qubits: (0..EIGEN_QUBITS).collect(),
        phases,
    })
}

/// Eigen-register basis index of an eigenstate string.
pub fn eigen_index(bits: &str) -> usize {
    usize::from_str_radix(bits, 2).expect("eigenstate strings are binary")
}

/// One phase-estimation circuit per canonical tour, in [`enumerate_tours`] order.
pub fn build_tsp_circuits(instance: &TspInstance, enc: &TspEncoding) -> Result<Vec<Circuit>, TspError> {
    let unitary = BlockUnitary::Diagonal(build_tour_unitary(instance, enc)?);
    enumerate_tours(CIRCUIT_NODES)?
        .iter()
        .map(|tour| {
            let bits = tour_eigenstate(tour)?;
            let mut prep = Circuit::new(EIGEN_QUBITS, 0);
            for (i, _) in bits.char_indices().filter(|&(_, ch)| ch == '1') {
                prep.x(EIGEN_QUBITS - 1 - i);
            }
            Ok(phase_estimation(&PhaseEstimationSpec {
                unit_bits: enc.unit_bits,
                eigen_size: EIGEN_QUBITS,
                eigen_prep: prep,
                unitary: unitary.clone(),
            })?)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TourCost {
    pub tour: TspTour,
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BruteForce {
    pub tours: Vec<TourCost>,
    /// Indices into `tours` of every shortest tour.
    pub best: Vec<usize>,
    pub best_distance: f64,
}

/// Relative tolerance under which two tour lengths count as equal.
const TIE_EPS: f64 = 1e-9;

pub fn classical_brute_force(instance: &TspInstance) -> BruteForce {
    let tours: Vec<TourCost> = enumerate_tours(instance.n_nodes())
        .expect("instance size is validated on construction")
        .into_iter()
        .map(|tour| TourCost {
            distance: instance.tour_distance(&tour),
            tour,
        })
        .collect();
    let best_distance = tours.iter().map(|t| t.distance).fold(f64::INFINITY, f64::min);
    let best = tours
        .iter()
        .enumerate()
        .filter(|(_, t)| t.distance - best_distance <= TIE_EPS * best_distance.max(1.0))
        .map(|(i, _)| i)
        .collect();
    BruteForce {
        tours,
        best,
        best_distance,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodedTour {
    pub tour: TspTour,
    pub eigenstate: String,
    pub y_mode: u64,
    pub est_distance: f64,
    pub true_distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TspDecode {
    pub tours: Vec<DecodedTour>,
    /// Index into `tours` of the decoded shortest tour.
    pub best: usize,
    /// Tours whose estimate lies within one quantization step of the best.
    pub near_ties: Vec<usize>,
    pub quantization_step: f64,
    pub verified: bool,
}

impl TspDecode {
    pub fn best_tour(&self) -> &TspTour {
        &self.tours[self.best].tour
    }

    pub fn is_tie(&self) -> bool {
        self.near_ties.len() > 1
    }
}

/// Reads each circuit's most frequent outcome back into a tour length.
pub fn decode_tsp(histograms: &[Histogram], instance: &TspInstance, enc: &TspEncoding) -> Result<TspDecode, TspError> {
    enc.check(instance)?;
    let tours = enumerate_tours(CIRCUIT_NODES)?;
    if histograms.len() != tours.len() {
        return Err(TspError::HistogramCount {
            expected: tours.len(),
            found: histograms.len(),
        });
    }
    let mut decoded = Vec::with_capacity(tours.len());
    for (index, (h, tour)) in histograms.iter().zip(tours).enumerate() {
        if h.bits() != enc.unit_bits {
            return Err(TspError::HistogramWidth {
                index,
                found: h.bits(),
                expected: enc.unit_bits,
            });
        }
        let (y_mode, _) = h.mode().ok_or(TspError::EmptyHistogram(index))?;
        decoded.push(DecodedTour {
            eigenstate: tour_eigenstate(&tour)?,
            y_mode,
            est_distance: enc.estimate_distance(y_mode),
            true_distance: instance.tour_distance(&tour),
            tour,
        });
    }
    let best = decoded
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.est_distance.total_cmp(&b.1.est_distance))
        .map(|(i, _)| i)
        .expect("three tours");
    let step = enc.quantization_step();
    let best_est = decoded[best].est_distance;
    let near_ties = decoded
        .iter()
        .enumerate()
        .filter(|(_, d)| d.est_distance - best_est <= step * (1.0 + 1e-9))
        .map(|(i, _)| i)
        .collect();
    let brute = classical_brute_force(instance);
    let gap = decoded[best].true_distance - brute.best_distance;
    let verified = brute.best.contains(&best) || gap < step;
    Ok(TspDecode {
        tours: decoded,
        best,
        near_ties,
        quantization_step: step,
        verified,
    })
}

/// Worst-case length error of a reading that lands on the nearest grid point.
pub fn quantization_bound(enc: &TspEncoding) -> f64 {
    PI / ((1u64 << enc.unit_bits) as f64 * enc.lambda)
}
