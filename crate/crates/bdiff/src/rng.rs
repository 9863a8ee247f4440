//! Counter-based seed expansion.
//!
//! Every random draw belongs to a `(purpose, node, step)` cell, and each cell
//! gets its own generator keyed by a hash of the master seed and the cell
//! coordinates. Changing the node count or horizon therefore never shifts
//! draws in other cells.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Topology = 1,
    Regressor = 2,
    Noise = 3,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn substream(seed: u64, purpose: Purpose, node: u64, step: u64) -> ChaCha8Rng {
    let mut h = splitmix64(seed);
    for word in [purpose as u64, node, step] {
        h = splitmix64(h ^ word);
    }
    ChaCha8Rng::seed_from_u64(h)
}
