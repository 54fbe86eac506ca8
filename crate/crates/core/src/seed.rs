//! Sub-seed derivation.
//!
//! Every random stream in the simulator (link loss, channel noise, test bits)
//! is seeded from one user-facing seed through [`derive_seed`], so a single
//! `--seed` reproduces a whole run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream identifiers used when fanning a master seed out to subsystems.
pub mod stream {
    pub const LINK_LOSS: u64 = 1;
    pub const CHANNEL_NOISE: u64 = 2;
    pub const BER_BITS: u64 = 3;
    pub const BER_NOISE: u64 = 4;
    pub const GESTURE: u64 = 5;
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent sub-seed for `stream` from `master`.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    mix(mix(master) ^ mix(stream.wrapping_mul(0xD6E8_FEB8_6659_FD93)))
}

pub(crate) fn rng_for(master: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stream))
}
