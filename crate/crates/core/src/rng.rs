//! Seed derivation. Every run owns one master seed that is split into named
//! substreams, so adding a consumer never shifts another consumer's draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type SimRng = ChaCha8Rng;

pub const FAILURE_STREAM: &str = "failures";
pub const NOISE_STREAM: &str = "noise";

fn digest_u64(parts: &[&[u8]]) -> u64 {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("sha256 yields 32 bytes"))
}

/// Stable per-trial seed from (master seed, trial index).
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    digest_u64(&[b"trial", &master.to_le_bytes(), &trial.to_le_bytes()])
}

/// Independent generator for the named substream of `seed`.
pub fn substream(seed: u64, name: &str) -> SimRng {
    SimRng::seed_from_u64(digest_u64(&[
        b"stream",
        &seed.to_le_bytes(),
        name.as_bytes(),
    ]))
}
