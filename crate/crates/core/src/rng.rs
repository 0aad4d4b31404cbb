//! Deterministic random streams keyed by `(master seed, index path)`.
//!
//! Every stochastic operation takes its generator explicitly. Replicate `b` of a
//! bootstrap always draws from `stream(seed, &[b])`, so results do not depend on
//! how replicates are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a master seed and a path of indices.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix(master), |acc, &k| splitmix(acc ^ splitmix(k.wrapping_add(1))))
}

pub fn stream(master: u64, path: &[u64]) -> Stream {
    ChaCha8Rng::seed_from_u64(derive_seed(master, path))
}

/// Sub-stream tags so independent consumers never share draws.
pub mod tags {
    pub const RESIDUALS: u64 = 0x5245_5349;
    pub const FIRST_STAGE: u64 = 0x4649_5253;
    pub const DENOMINATOR: u64 = 0x4445_4e4f;
    pub const NUMERATOR: u64 = 0x4e55_4d45;
    pub const SIMULATION: u64 = 0x5349_4d55;
}
