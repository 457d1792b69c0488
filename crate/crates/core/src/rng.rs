//! Seed-derivation helpers.
//!
//! Every generator in the crate takes one root seed and derives an
//! independent ChaCha stream per logical object (channel triple, restart,
//! scenario). Streams are keyed by fixed-radix counters, so enlarging a
//! network (more receivers, longer extension) never perturbs the draws of
//! the objects that already existed.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream counter for a channel keyed by (receiver, transmitter, antenna).
///
/// Fixed radixes keep ids stable across network sizes; node counts beyond
/// the radix are rejected at configuration time long before this point.
pub(crate) fn channel_stream(rx: usize, tx: usize, antenna: usize) -> u64 {
    debug_assert!(rx < (1 << 20) && tx < (1 << 20) && antenna < (1 << 20));
    ((rx as u64) << 40) | ((tx as u64) << 20) | antenna as u64
}

/// A ChaCha generator positioned on `stream` of the cipher keyed by `seed`.
pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives an unrelated root seed for a dependent scenario (e.g. the
/// specialized re-draw used by the block-diagonal check). SplitMix64 step.
pub(crate) fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One channel coefficient: magnitude uniform on [h_min, h_max], phase
/// uniform on [0, 2π). Draw order (magnitude first) is part of the
/// reproducibility contract.
pub(crate) fn polar_coefficient(rng: &mut ChaCha8Rng, h_min: f64, h_max: f64) -> Complex64 {
    let magnitude = rng.random_range(h_min..h_max);
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    Complex64::from_polar(magnitude, phase)
}
