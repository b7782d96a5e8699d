//! Seeded randomness.
//!
//! Every stochastic step (dataset split, CPM initialisation and batching,
//! synthetic data, MLP training, Mixup λ draws) uses ChaCha8 seeded through
//! `SeedableRng::seed_from_u64`. Independent streams are derived from a base
//! seed and a tuple of labels with a SplitMix64 finaliser, so a stream only
//! depends on its own coordinates and never on execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type AuditRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> AuditRng {
    AuditRng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `base` with each coordinate in turn.
pub fn derive_seed(base: u64, coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(splitmix64(base), |acc, &c| splitmix64(acc ^ splitmix64(c)))
}

pub fn derived(base: u64, coords: &[u64]) -> AuditRng {
    seeded(derive_seed(base, coords))
}
