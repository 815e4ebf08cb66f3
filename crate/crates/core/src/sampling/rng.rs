//! Seeded random streams.
//!
//! Every random draw in a document comes from a ChaCha8 generator keyed by
//! `(master seed, domain, stream id, attempt)`. The key is hashed with
//! SHA-256 so streams are independent and the mapping is identical on every
//! platform and for every worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub type DocRng = ChaCha8Rng;

/// Draws that shape the permutation.
pub const DOMAIN_FREEZE: &str = "freeze";
/// Draws that produce fake values.
pub const DOMAIN_VALUES: &str = "values";
/// Draws used by the random-placement layout baseline.
pub const DOMAIN_LAYOUT: &str = "layout";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomSource {
    pub seed: u64,
    pub stream: u64,
}

impl RandomSource {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self, domain: &str) -> DocRng {
        self.rng_attempt(domain, 0)
    }

    /// Generator for retry `attempt`; attempt 0 is the primary stream.
    pub fn rng_attempt(&self, domain: &str, attempt: u32) -> DocRng {
        let mut hasher = Sha256::new();
        hasher.update(b"docsynth/stream/v1");
        hasher.update(self.seed.to_le_bytes());
        hasher.update(self.stream.to_le_bytes());
        hasher.update((domain.len() as u64).to_le_bytes());
        hasher.update(domain.as_bytes());
        hasher.update(attempt.to_le_bytes());
        let digest = hasher.finalize();
        let mut key = [0u8; 32];
        key.copy_from_slice(&digest);
        ChaCha8Rng::from_seed(key)
    }
}
