//! Deterministic, splittable random streams.
//!
//! Every stochastic task (a band, a grid point, a realization) derives its own
//! ChaCha stream from the run seed and a list of integer tags. Streams are
//! independent of execution order, so parallel runs reproduce serial ones.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mix `(seed, tags...)` into a single derived seed.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    let mut state = seed ^ 0x6465_7269_7665_6421;
    let _ = splitmix64(&mut state);
    for &t in tags {
        state ^= t.wrapping_mul(GAMMA) ^ splitmix64(&mut state);
    }
    splitmix64(&mut state)
}

/// Derive an independent random stream from `(seed, tags...)`.
pub fn task_rng(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    let mut state = seed ^ 0x5275_7374_5246_4e47; // distinguish from raw seeds
    let _ = splitmix64(&mut state);
    for &t in tags {
        state ^= t.wrapping_mul(GAMMA) ^ splitmix64(&mut state);
    }
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
