//! Deterministic per-task random streams.
//!
//! Every replication draws from its own ChaCha stream whose seed is a
//! SplitMix64 mix of `(master, tag, n, index)`, so results never depend on
//! how tasks are scheduled across workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TaskRng = ChaCha8Rng;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, tag: u64, n: u64, index: u64) -> u64 {
    let mut s = splitmix64(master);
    for part in [tag, n, index] {
        s = splitmix64(s ^ splitmix64(part));
    }
    s
}

pub fn task_rng(master: u64, tag: u64, n: u64, index: u64) -> TaskRng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, tag, n, index))
}
