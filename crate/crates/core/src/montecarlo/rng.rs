//! Counter-based random streams.
//!
//! Every stream is a ChaCha8 keystream keyed by `(seed, lane)` and positioned
//! by the trial index, so any trial can be regenerated on its own and in any
//! order.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Point process: counts, positions, start times, fading to the typical tag.
pub(crate) const LANE_NETWORK: u64 = 1;
/// Reverse-channel fading of the typical pair.
pub(crate) const LANE_TYPICAL: u64 = 2;
/// Independent thinning marks of candidate interferers.
pub(crate) const LANE_THINNING: u64 = 3;
/// Per-tag forward fading used when an interferer's own energy is simulated;
/// the tag's point index is added to this base.
pub(crate) const LANE_TAG_BASE: u64 = 1 << 32;

const DOMAIN: &[u8; 16] = b"bwpc/time-space\0";

pub(crate) fn stream(seed: u64, trial: u64, lane: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&lane.to_le_bytes());
    key[16..].copy_from_slice(DOMAIN);
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(trial);
    rng
}

/// Circularly-symmetric complex Gaussian with unit variance.
pub(crate) fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}
