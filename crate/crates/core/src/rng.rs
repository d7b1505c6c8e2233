//! Seed derivation.
//!
//! A root seed fans out into independent Xoshiro256++ streams, one per
//! purpose, so graph construction, trader placement, spin initialisation and
//! dynamics can each be replayed in isolation.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type SimRng = Xoshiro256PlusPlus;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Graph = 1,
    TraderTypes = 2,
    InitialSpins = 3,
    Dynamics = 4,
}

/// SplitMix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based child seed: the `index`-th seed derived from `root`.
pub fn derive_seed(root: u64, index: u64) -> u64 {
    mix(mix(root) ^ mix(index.wrapping_add(0xA076_1D64_78BD_642F)))
}

pub fn stream_rng(root: u64, stream: Stream) -> SimRng {
    Xoshiro256PlusPlus::seed_from_u64(derive_seed(root, stream as u64))
}
