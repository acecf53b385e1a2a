//! Deterministic random-number substreams.
//!
//! Every stream is keyed by `(seed, stage, index)` so that a particle's draws depend
//! only on its position in the population, never on which worker advances it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Index reserved for the population-level stream (resampling uniforms).
pub const COORDINATOR: u64 = u64::MAX;

pub fn substream(seed: u64, stage: u64, index: u64) -> StreamRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&stage.to_le_bytes());
    key[16..24].copy_from_slice(&index.to_le_bytes());
    key[24..].copy_from_slice(b"gptemper");
    ChaCha8Rng::from_seed(key)
}
