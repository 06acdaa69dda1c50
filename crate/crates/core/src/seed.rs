//! Deterministic random-stream derivation.
//!
//! Every random draw in a simulation comes from a stream keyed by
//! `(master_seed, index, tag)`. Streams never share state, so the order in
//! which rounds, trials or parties are evaluated cannot change any value.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random stream type used throughout the simulator.
pub type Stream = ChaCha8Rng;

/// Owner of a derived stream inside one round or trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Party {
    Alice = 0xA11CE,
    Bob = 0xB0B,
    Eve = 0xE7E,
    /// Bob's message or raw-key bits for a whole session.
    BobSource = 0xB0B5_0C,
    /// Per-trial session seeds in Monte Carlo estimators.
    Trial = 0x7121A1,
    /// Toeplitz seed material.
    Hash = 0x4A54,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed, an index and a party tag into one 64-bit seed.
pub fn hash64(master_seed: u64, index: u64, tag: u64) -> u64 {
    let h = splitmix64(master_seed);
    let h = splitmix64(h ^ index);
    splitmix64(h ^ tag)
}

pub fn stream(master_seed: u64, index: u64, party: Party) -> Stream {
    Stream::seed_from_u64(hash64(master_seed, index, party as u64))
}
