//! Deterministic per-trial seeding.
//!
//! A trial is identified by `(master, stream)`. The pair is expanded into a
//! 256-bit xoshiro256++ state by SplitMix64 avalanche mixing, so trials can
//! run in any order or on any worker and still reproduce bit-for-bit.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

/// Generator used by every stochastic routine in the crate.
pub type TrialRng = Xoshiro256PlusPlus;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed {
    pub master: u64,
    pub stream: u64,
}

impl Seed {
    pub fn new(master: u64, stream: u64) -> Self {
        Seed { master, stream }
    }

    pub fn rng(self) -> TrialRng {
        TrialRng::from_seed(derive_stream(self.master, self.stream))
    }

    /// A child seed for a sub-experiment, e.g. one point of a sweep.
    pub fn child(self, index: u64) -> Seed {
        Seed::new(mix64(self.master ^ mix64(self.stream.wrapping_add(index))), index)
    }
}

/// SplitMix64 finaliser (Stafford variant 13).
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Expands `(master, index)` into a generator state.
///
/// The index is mixed before being combined with the master seed so that
/// neighbouring indices land far apart, then four SplitMix64 outputs fill the
/// state. SplitMix64 output words are never all zero for four consecutive
/// counter values, so the xoshiro state is always valid.
pub fn derive_stream(master: u64, index: u64) -> [u8; 32] {
    let mut state = mix64(master) ^ mix64(index ^ 0x6a09_e667_f3bc_c909).rotate_left(17);
    let mut out = [0u8; 32];
    for chunk in out.chunks_exact_mut(8) {
        state = state.wrapping_add(GOLDEN_GAMMA);
        chunk.copy_from_slice(&mix64(state).to_le_bytes());
    }
    out
}
