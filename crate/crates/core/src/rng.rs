//! Keyed, counter-based random streams.
//!
//! Every random draw is addressed by `(seed, domain, stream, word offset)`.
//! A ChaCha block cipher is seeked to that address, so the value a given
//! message or batch receives does not depend on which thread produced it or
//! in which order.

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Separates independent uses of the same user seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Codebook = 1,
    MonteCarlo = 2,
    Oracle = 3,
    PhotonSampling = 4,
}

/// Words of keystream reserved for one complex Gaussian draw.
pub const WORDS_PER_GAUSSIAN: u128 = 4;

pub fn keyed_rng(seed: u64, domain: Domain, stream: u64) -> ChaCha8Rng {
    let key = seed.wrapping_add((domain as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(stream);
    rng
}

/// Uniform on `(0, 1]` from one 64-bit word; never returns zero, so its log
/// is finite.
pub fn open_unit(rng: &mut (impl RngCore + ?Sized)) -> f64 {
    ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Circularly symmetric complex Gaussian with `E|z|² = variance`, by
/// Box–Muller from exactly two words of keystream.
pub fn complex_gaussian(rng: &mut (impl RngCore + ?Sized), variance: f64) -> Complex64 {
    let u1 = open_unit(rng);
    let u2 = open_unit(rng);
    let r = (-variance * u1.ln()).sqrt();
    Complex64::from_polar(r, std::f64::consts::TAU * u2)
}

/// The Gaussian for `(seed, stream, index)`, independent of any other draw.
pub fn keyed_complex_gaussian(seed: u64, domain: Domain, stream: u64, index: u64, variance: f64) -> Complex64 {
    let mut rng = keyed_rng(seed, domain, stream);
    rng.set_word_pos(u128::from(index) * WORDS_PER_GAUSSIAN);
    complex_gaussian(&mut rng, variance)
}
