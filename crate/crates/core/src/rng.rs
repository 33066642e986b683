//! Counter-based RNG stream derivation.
//!
//! A stream is keyed by the master seed plus four words; the mapping from
//! `(master, words)` to the ChaCha key and stream id is injective, so distinct
//! tuples can never share a stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn derive_rng(master: u64, words: [u64; 4]) -> StreamRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master.to_le_bytes());
    for (i, w) in words[..3].iter().enumerate() {
        key[8 + 8 * i..16 + 8 * i].copy_from_slice(&w.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(words[3]);
    rng
}

/// Convenience for a plain seed with no further derivation.
pub fn seeded(seed: u64) -> StreamRng {
    derive_rng(seed, [0; 4])
}
