// SPDX-License-Identifier: Apache-2.0

//! Seed derivation and content digests.
//!
//! Every random stream is a ChaCha8 generator keyed by
//! `sha256(root, purpose-label, indices)`, so streams for different
//! purposes (process noise, label noise, Monte-Carlo samples, restarts)
//! never share key material.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub fn derive(root: u64, label: &str, indices: &[u64]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(root.to_le_bytes());
    hasher.update((label.len() as u64).to_le_bytes());
    hasher.update(label.as_bytes());
    for i in indices {
        hasher.update(i.to_le_bytes());
    }
    hasher.finalize().into()
}

/// A 64-bit child seed, for APIs that take a plain `u64`.
pub fn derive_u64(root: u64, label: &str, indices: &[u64]) -> u64 {
    let bytes = derive(root, label, indices);
    u64::from_le_bytes(bytes[..8].try_into().expect("8 bytes"))
}

pub fn rng(root: u64, label: &str, indices: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(derive(root, label, indices))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
