//! Counter-based random streams.
//!
//! Every draw is a pure function of `(seed, purpose, index, counter)`, so a
//! stream for slot `n` can be created without replaying slots `0..n` and
//! results do not depend on evaluation order.

use crate::math::{self, C64};
use rand_distr::{Distribution, Exp1, StandardNormal};

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent seed and an index.
#[inline]
pub fn derive(seed: u64, index: u64) -> u64 {
    mix64(mix64(seed ^ 0xA076_1D64_78BD_642F).wrapping_add(index.wrapping_mul(GAMMA)))
}

/// What a stream is used for. Each purpose gets an independent key space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    ChannelTaps = 1,
    Pilots = 2,
    DataSymbols = 3,
    Noise = 4,
    Interference = 5,
    InterfererGain = 6,
    Crc = 7,
    Perturbation = 8,
    Shuffle = 9,
    Schedule = 10,
}

#[derive(Debug, Clone)]
pub struct Stream {
    key: u64,
    counter: u64,
}

impl Stream {
    pub fn new(seed: u64, purpose: Purpose, index: u64) -> Self {
        let key = derive(derive(seed, purpose as u64), index);
        Stream {
            key,
            counter: 0,
        }
    }

    /// Independent sub-stream, e.g. one per antenna.
    pub fn substream(&self, sub: u64) -> Self {
        Stream {
            key: derive(self.key, sub.wrapping_add(0x5851_F42D_4C95_7F2D)),
            counter: 0,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let z = self.key.wrapping_add(self.counter.wrapping_mul(GAMMA));
        self.counter = self.counter.wrapping_add(1);
        mix64(z)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n`.
    #[inline]
    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        // Lemire's multiply-shift; bias is negligible for the sizes used here.
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    /// Standard normal (ziggurat).
    #[inline]
    pub fn gaussian(&mut self) -> f64 {
        StandardNormal.sample(self)
    }

    /// Circularly-symmetric complex Gaussian with total variance `var`.
    #[inline]
    pub fn complex_gaussian(&mut self, var: f64) -> C64 {
        let s = math::sqrt(0.5 * var);
        let re = self.gaussian();
        let im = self.gaussian();
        C64::new(s * re, s * im)
    }

    /// Exponential with unit mean.
    pub fn exponential(&mut self) -> f64 {
        Exp1.sample(self)
    }
}

impl rand_core::RngCore for Stream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        (Stream::next_u64(self) >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        Stream::next_u64(self)
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        rand_core::impls::fill_bytes_via_next(self, dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut a = Stream::new(7, Purpose::Noise, 3);
        let mut b = Stream::new(7, Purpose::Noise, 3);
        let mut c = Stream::new(7, Purpose::Noise, 4);
        let mut d = Stream::new(7, Purpose::Interference, 3);
        let xa: [u64; 4] = core::array::from_fn(|_| a.next_u64());
        let xb: [u64; 4] = core::array::from_fn(|_| b.next_u64());
        let xc: [u64; 4] = core::array::from_fn(|_| c.next_u64());
        let xd: [u64; 4] = core::array::from_fn(|_| d.next_u64());
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
        assert_ne!(xa, xd);
    }

    #[test]
    fn gaussian_moments() {
        let mut s = Stream::new(1, Purpose::Noise, 0);
        let n = 200_000;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for _ in 0..n {
            let z = s.gaussian();
            sum += z;
            sq += z * z;
        }
        let m = sum / n as f64;
        let v = sq / n as f64 - m * m;
        assert!(m.abs() < 0.01, "mean {m}");
        assert!((v - 1.0).abs() < 0.01, "var {v}");
    }

    #[test]
    fn complex_gaussian_variance_split() {
        let mut s = Stream::new(2, Purpose::Noise, 0);
        let n = 200_000;
        let (mut re, mut im) = (0.0, 0.0);
        for _ in 0..n {
            let z = s.complex_gaussian(2.0);
            re += z.re * z.re;
            im += z.im * z.im;
        }
        assert!((re / n as f64 - 1.0).abs() < 0.02);
        assert!((im / n as f64 - 1.0).abs() < 0.02);
    }

    #[test]
    fn below_in_range() {
        let mut s = Stream::new(3, Purpose::Shuffle, 0);
        for _ in 0..1000 {
            assert!(s.below(7) < 7);
        }
    }
}
