//! Seed-reproducible random sources.
//!
//! All randomness comes from ChaCha8 keystreams, which are counter based: the
//! value at any position depends only on (seed, stream, position), so results
//! are identical across platforms and chunkings. Gaussian deviates use the
//! Box–Muller transform on 53-bit uniforms in (0, 1].

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Stream identifiers, so that independent components never share keystream.
pub mod stream {
    pub const NOISE: u64 = 1;
    pub const INTERFERER_I: u64 = 2;
    pub const INTERFERER_Q: u64 = 3;
    pub const TEST_CHIPS: u64 = 9;
}

fn keystream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Sequential Gaussian source.
pub struct GaussianSource {
    rng: ChaCha8Rng,
}

impl GaussianSource {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self {
            rng: keystream(seed, stream),
        }
    }

    /// Uniform deviate in (0, 1].
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Two independent standard normal deviates.
    #[inline]
    pub fn pair(&mut self) -> (f64, f64) {
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        (r * c, r * s)
    }
}

/// Fills `out` with ±1 chips `first .. first + out.len()` of the given stream.
///
/// Chip `k` is bit `k % 32` of keystream word `k / 32`, so any window of the
/// infinite chip sequence can be regenerated independently.
pub fn random_chips(seed: u64, stream: u64, first: u64, out: &mut [i8]) {
    if out.is_empty() {
        return;
    }
    let mut rng = keystream(seed, stream);
    let mut word_idx = first / 32;
    rng.set_word_pos(word_idx as u128);
    let mut word = rng.next_u32();
    for (n, chip) in out.iter_mut().enumerate() {
        let k = first + n as u64;
        if k / 32 != word_idx {
            word_idx = k / 32;
            word = rng.next_u32();
        }
        *chip = if (word >> (k % 32)) & 1 == 0 { 1 } else { -1 };
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chip_windows_agree() {
        let mut whole = vec![0i8; 500];
        random_chips(7, stream::TEST_CHIPS, 0, &mut whole);
        let mut part = vec![0i8; 123];
        random_chips(7, stream::TEST_CHIPS, 77, &mut part);
        assert_eq!(&whole[77..200], &part[..]);
        let balance: i32 = whole.iter().map(|&c| c as i32).sum();
        assert!(balance.abs() < 100);
    }

    #[test]
    fn gaussian_moments() {
        let mut g = GaussianSource::new(3, stream::NOISE);
        let n = 200_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n / 2 {
            let (a, b) = g.pair();
            s += a + b;
            s2 += a * a + b * b;
        }
        let mean = s / n as f64;
        let var = s2 / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01);
        assert!((var - 1.0).abs() < 0.01);
    }

    #[test]
    fn streams_are_reproducible() {
        let mut a = GaussianSource::new(42, stream::NOISE);
        let mut b = GaussianSource::new(42, stream::NOISE);
        for _ in 0..10 {
            assert_eq!(a.pair(), b.pair());
        }
    }
}
