//! Deterministic seed derivation for parallel randomized work.

use sha2::{Digest, Sha256};

/// Seed for the task identified by `key` under `root`: the root xor the
/// first eight bytes of the key's SHA-256 digest.
pub fn derive_seed(root: u64, key: &[u8]) -> u64 {
    let digest = Sha256::digest(key);
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    root ^ u64::from_le_bytes(head)
}
