//! Seed derivation and the two elementary draws every simulator needs.
//!
//! Replicate `r` of a run with master seed `m` uses the stream seeded by
//! `m ^ splitmix64(r)`, so replicates are independent of each other and of
//! the execution order.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer. Used only to spread replicate indices; the actual
/// streams come from ChaCha8.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for replicate `replicate` of a run with the given master seed.
pub fn replicate_seed(master: u64, replicate: u64) -> u64 {
    master ^ splitmix64(replicate)
}

/// Independent, reproducible stream for one replicate.
pub fn replicate_rng(master: u64, replicate: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(replicate_seed(master, replicate))
}

/// Stream seeded directly, for single-run simulators.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Exponential waiting time with the given rate.
///
/// Uses 1 - U so the argument of `ln` stays in (0, 1].
pub fn exp_time<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    debug_assert!(rate > 0.0);
    -(1.0 - rng.random::<f64>()).ln() / rate
}

/// Offset of an upward jump: k >= 1 with P(k) = (1 - c) c^(k-1).
///
/// Inverse transform: k = 1 + floor(ln(1 - U) / ln c).
pub fn geometric_offset<R: Rng + ?Sized>(rng: &mut R, c: f64) -> u32 {
    debug_assert!(c > 0.0 && c < 1.0);
    let u = 1.0 - rng.random::<f64>();
    let k = (u.ln() / c.ln()).floor();
    1 + if k >= u32::MAX as f64 { u32::MAX - 1 } else { k as u32 }
}
