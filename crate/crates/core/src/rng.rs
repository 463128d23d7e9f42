//! Seed plumbing. Every stochastic routine takes an explicit `u64` seed and
//! derives independent streams from it, so results never depend on thread
//! scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer over `(seed, stream)`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x6A09_E667_F3BC_C909);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed2(seed: u64, a: u64, b: u64) -> u64 {
    derive_seed(derive_seed(seed, a), b)
}

/// Number of successes in `shots` Bernoulli trials with probability `p`.
pub fn sample_binomial(rng: &mut Rng, shots: u64, p: f64) -> u64 {
    let p = p.clamp(0.0, 1.0);
    Binomial::new(shots, p).expect("valid binomial").sample(rng)
}

/// Multinomial counts by sequential conditional binomials.
pub fn sample_multinomial(rng: &mut Rng, shots: u64, probs: &[f64]) -> Vec<u64> {
    let total: f64 = probs.iter().map(|p| p.max(0.0)).sum();
    let mut remaining = shots;
    let mut mass = total;
    let mut out = Vec::with_capacity(probs.len());
    for (i, p) in probs.iter().enumerate() {
        let p = p.max(0.0);
        if i + 1 == probs.len() {
            out.push(remaining);
            break;
        }
        let k = if remaining == 0 || mass <= 0.0 {
            0
        } else {
            sample_binomial(rng, remaining, p / mass)
        };
        out.push(k);
        remaining -= k;
        mass -= p;
    }
    out
}
