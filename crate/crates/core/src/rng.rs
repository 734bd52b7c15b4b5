//! Per-record random streams derived from one global seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type RecordRng = ChaCha8Rng;

/// Seed bytes for `(seed, key)`; independent of call order and thread.
pub fn derive_seed(seed: u64, key: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((key.len() as u64).to_le_bytes());
    h.update(key.as_bytes());
    h.finalize().into()
}

pub fn record_rng(seed: u64, key: &str) -> RecordRng {
    ChaCha8Rng::from_seed(derive_seed(seed, key))
}
