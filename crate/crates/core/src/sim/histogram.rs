use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::SimError;

/// Shot counts keyed by measured bitstring. The leftmost character is the
/// highest classical bit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawHistogram")]
pub struct Histogram {
    bits: usize,
    shots: u64,
    counts: BTreeMap<String, u64>,
}

#[derive(Deserialize)]
struct RawHistogram {
    bits: usize,
    shots: u64,
    counts: BTreeMap<String, u64>,
}

impl TryFrom<RawHistogram> for Histogram {
    type Error = SimError;

    fn try_from(raw: RawHistogram) -> Result<Self, Self::Error> {
        let h = Histogram::from_counts(raw.bits, raw.counts)?;
        if h.shots != raw.shots {
            return Err(SimError::Histogram(format!(
                "counts sum to {} but shots is {}",
                h.shots, raw.shots
            )));
        }
        Ok(h)
    }
}

impl Histogram {
    /// Builds a histogram from explicit counts; `shots` is their sum.
    pub fn from_counts(bits: usize, counts: BTreeMap<String, u64>) -> Result<Self, SimError> {
        for key in counts.keys() {
            if key.len() != bits || !key.chars().all(|c| c == '0' || c == '1') {
                return Err(SimError::Histogram(format!("key '{key}' is not a {bits}-bit string")));
            }
        }
        let counts: BTreeMap<String, u64> = counts.into_iter().filter(|(_, n)| *n > 0).collect();
        let shots = counts.values().sum();
        Ok(Histogram { bits, shots, counts })
    }

    /// Counts each integer outcome in `values` (low bit = classical bit 0).
    pub fn from_values(bits: usize, values: impl IntoIterator<Item = u64>) -> Self {
        let mut by_value: BTreeMap<u64, u64> = BTreeMap::new();
        for v in values {
            *by_value.entry(v).or_default() += 1;
        }
        let counts = by_value
            .into_iter()
            .map(|(v, n)| (format_bits(v, bits), n))
            .collect::<BTreeMap<_, _>>();
        let shots = counts.values().sum();
        Histogram { bits, shots, counts }
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn counts(&self) -> &BTreeMap<String, u64> {
        &self.counts
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn count(&self, key: &str) -> u64 {
        self.counts.get(key).copied().unwrap_or(0)
    }

    pub fn count_value(&self, value: u64) -> u64 {
        self.count(&format_bits(value, self.bits))
    }

    pub fn frequency(&self, key: &str) -> f64 {
        if self.shots == 0 {
            0.0
        } else {
            self.count(key) as f64 / self.shots as f64
        }
    }

    /// Counts keyed by integer outcome.
    pub fn value_counts(&self) -> BTreeMap<u64, u64> {
        self.counts.iter().map(|(k, &n)| (parse_bits(k), n)).collect()
    }

    /// `(value, count)` pairs by descending count, ties by ascending value.
    pub fn ranked(&self) -> Vec<(u64, u64)> {
        let mut v: Vec<(u64, u64)> = self.value_counts().into_iter().collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        v
    }

    /// Most frequent outcome; ties go to the smallest value.
    pub fn mode(&self) -> Option<(u64, u64)> {
        self.ranked().first().copied()
    }

    /// Relative frequency per integer outcome.
    pub fn frequencies(&self) -> BTreeMap<u64, f64> {
        self.value_counts()
            .into_iter()
            .map(|(v, n)| (v, n as f64 / self.shots as f64))
            .collect()
    }
}

pub(crate) fn format_bits(value: u64, bits: usize) -> String {
    if bits == 0 {
        String::new()
    } else {
        format!("{value:0bits$b}")
    }
}

pub(crate) fn parse_bits(key: &str) -> u64 {
    if key.is_empty() {
        0
    } else {
        u64::from_str_radix(key, 2).expect("histogram keys are validated bitstrings")
    }
}
