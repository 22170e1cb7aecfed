//! Counter-based randomness.
//!
//! The uniform variate attached to an edge in sample `i` is a hash of
//! `(seed, i, edge key)`. Nothing depends on visiting order, worker count or
//! the box the edge was enumerated in, which is what makes the shared-draw
//! monotonicity checks exact.

use serde::{Deserialize, Serialize};

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Base seed plus sample index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed {
    pub seed: u64,
    pub stream: u64,
}

impl RngSeed {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Premixed key for this `(seed, stream)`; combine with edge keys via
    /// [`edge_uniform`].
    #[inline]
    pub fn stream_key(&self) -> u64 {
        mix64(mix64(self.seed ^ GOLDEN).wrapping_add(self.stream.wrapping_mul(GOLDEN)))
    }
}

/// Uniform in `[0, 1)` for one edge within one sample stream.
#[inline]
pub fn edge_uniform(stream_key: u64, edge_key: u64) -> f64 {
    let h = mix64(mix64(stream_key ^ edge_key).wrapping_add(GOLDEN));
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Box-independent hash of a site's coordinates.
pub fn hash_coords<'a>(coords: impl IntoIterator<Item = &'a i64>) -> u64 {
    coords
        .into_iter()
        .fold(0x5eed_5eed_5eed_5eed, |h, &c| mix64(h ^ (c as u64).wrapping_mul(GOLDEN)))
}

/// Key of the edge between sites hashed as `lo` and `hi` (in canonical order).
#[inline]
pub fn pair_key(lo: u64, hi: u64) -> u64 {
    mix64(lo.rotate_left(17) ^ mix64(hi))
}

/// Derives an independent base seed for a named quantity.
pub fn derive_seed(base: u64, label: &str) -> u64 {
    // FNV-1a over the label
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    mix64(base ^ mix64(h))
}
