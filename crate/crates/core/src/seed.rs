//! Keyed random streams.
//!
//! Every random draw in the crate comes from a [`SeedKey`]. A key is a
//! `(master_seed, stream_index)` pair; the master seed seeds a ChaCha8
//! generator and the stream index selects one of its 2^64 independent
//! streams. Sub-purposes (probe cloud, augmentation draw, epoch shuffle)
//! derive child keys by hashing extra words into the stream index, so any
//! single artifact can be regenerated without replaying its siblings.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Purpose tags mixed into derived keys.
pub mod purpose {
    pub const CHAOS_GAME: u64 = 0x6368_616f_7367_616d;
    pub const IMAGE: u64 = 0x696d_6167_6500_0000;
    pub const AUGMENT: u64 = 0x6175_676d_656e_7400;
    pub const EPOCH: u64 = 0x6570_6f63_6800_0000;
    pub const ROTATION: u64 = 0x726f_7461_7465_0000;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedKey {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl SeedKey {
    pub const fn new(master_seed: u64, stream_index: u64) -> Self {
        Self {
            master_seed,
            stream_index,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }

    /// Child key on the same master seed. The stream index is a hash of the
    /// parent stream and `words`, so children of distinct parents (or with
    /// distinct words) land on unrelated streams.
    pub fn derive(&self, words: &[u64]) -> SeedKey {
        let mut h = splitmix64(self.stream_index ^ 0x9e37_79b9_7f4a_7c15);
        for &w in words {
            h = splitmix64(h ^ splitmix64(w));
        }
        SeedKey::new(self.master_seed, h)
    }

    /// Single 64-bit value summarizing the key, for manifests and plans.
    pub fn fingerprint(&self) -> u64 {
        splitmix64(splitmix64(self.master_seed) ^ self.stream_index)
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
