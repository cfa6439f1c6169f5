//! Counter-based stream derivation from a single master seed.
//!
//! Every consumer of randomness gets its own ChaCha stream addressed by a
//! `u64` counter, so draws are independent of evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Expands a 64-bit seed into a 256-bit ChaCha key.
pub(crate) fn master_key(seed: u64) -> [u8; 32] {
    let mut key = [0u8; 32];
    let mut s = seed;
    for chunk in key.chunks_exact_mut(8) {
        s = mix64(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    key
}

/// Independent generator for one counter value under the given key.
pub(crate) fn substream(key: &[u8; 32], counter: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::from_seed(*key);
    rng.set_stream(counter);
    rng
}
