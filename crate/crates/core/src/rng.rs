//! Deterministic random streams.
//!
//! Every random quantity attached to a tree node is drawn from a generator
//! seeded by a key derived from the run seed and the node's path, so a tree
//! is identical regardless of traversal order or worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator type used throughout the crate.
pub type RandomSource = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a sequence of labels into a seed, e.g. `derive_seed(run, &[n, replicate])`.
pub fn derive_seed(seed: u64, labels: &[u64]) -> u64 {
    labels.iter().fold(mix64(seed ^ GOLDEN), |acc, &label| {
        mix64(acc ^ mix64(label.wrapping_add(GOLDEN)))
    })
}

/// Key of a node in the genealogical tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeKey(u64);

impl NodeKey {
    pub fn root(seed: u64) -> Self {
        NodeKey(derive_seed(seed, &[0x524f_4f54]))
    }

    pub fn child(self, bit: u8) -> Self {
        NodeKey(mix64(self.0 ^ (u64::from(bit) + 1).wrapping_mul(GOLDEN)))
    }

    /// Independent auxiliary stream attached to this node (e.g. child selection).
    pub fn aux(self, salt: u64) -> Self {
        NodeKey(mix64(self.0.rotate_left(17) ^ mix64(salt)))
    }

    pub fn rng(self) -> RandomSource {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    pub fn value(self) -> u64 {
        self.0
    }
}

pub fn rng_from_seed(seed: u64) -> RandomSource {
    ChaCha8Rng::seed_from_u64(seed)
}
