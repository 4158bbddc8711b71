//! Seeds and the derivation of independent random streams from them.

use std::fmt;

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Root seed of a run. Equal seeds and equal inputs give bit-identical
/// results everywhere in the crate.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Seed {
    /// A generator on stream `stream` of this seed. Distinct streams never
    /// share output, so consumers of one cannot shift another.
    pub fn rng(self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(stream);
        rng
    }

    /// A child seed for an independent sub-computation labelled `stream`.
    pub fn derive(self, stream: u64) -> Seed {
        Seed(self.rng(stream).next_u64())
    }
}

impl From<u64> for Seed {
    fn from(v: u64) -> Self {
        Seed(v)
    }
}

impl fmt::Display for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}
