//! Seeded randomness for trajectory sampling.
//!
//! Every trajectory owns a ChaCha stream selected by its index, and token `i`
//! reads from a fixed word offset inside that stream. A sample therefore
//! depends only on `(seed, trajectory, token)`, which keeps engines in lock
//! step and makes parallel runs reproducible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniform draw in `[0, 1)` reserved for token `token` of trajectory `trajectory`.
pub fn token_uniform(seed: u64, trajectory: u64, token: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trajectory);
    rng.set_word_pos(token as u128 * 2);
    rng.gen::<f64>()
}

/// Index chosen by inverse-CDF sampling of `u` over `weights`.
///
/// Weights need not be normalized. Falls back to the last positive entry so
/// rounding in the cumulative sum never selects a zero-weight option.
pub fn pick(weights: &[f64], u: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if target < acc && *w > 0.0 {
            return i;
        }
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}
