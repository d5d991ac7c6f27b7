//! Seeded random streams.
//!
//! One 64-bit experiment seed is split into independent substreams by hashing
//! a path of integer labels (level, candidate index, shot block, ...). Every
//! substream is a ChaCha8 generator, so results depend only on the seed and
//! the label path, never on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// A node in the tree of substreams.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeedStream {
    key: u64,
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        SeedStream { key: mix64(seed) }
    }

    pub fn child(&self, label: u64) -> SeedStream {
        SeedStream { key: mix64(self.key ^ mix64(label.wrapping_add(0x632B_E59B_D9B4_E019))) }
    }

    pub fn rng(&self) -> StreamRng {
        ChaCha8Rng::seed_from_u64(self.key)
    }
}
