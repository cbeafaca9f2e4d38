//! Named random sub-streams derived from one run seed.
//!
//! Each consumer (recognition, init, batching, synth) draws from its own
//! ChaCha stream so that adding draws in one stage never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const RECOGNITION: &str = "recognition";
pub const INIT: &str = "init";
pub const BATCHING: &str = "batching";
pub const SYNTH: &str = "synth";

pub fn stream(seed: u64, name: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(name.as_bytes()));
    rng
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}
