//! Reproducible sample streams.
//!
//! Every random draw goes through a ChaCha8 stream keyed by
//! `(seed, name, counter)`, so the same run seed always yields the same
//! samples for the same purpose regardless of evaluation order.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

pub struct SampleStream {
    rng: ChaCha8Rng,
}

impl SampleStream {
    pub fn new(seed: u64, name: &str, counter: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&fnv1a(name.as_bytes()).to_le_bytes());
        key[16..24].copy_from_slice(&counter.to_le_bytes());
        Self {
            rng: ChaCha8Rng::from_seed(key),
        }
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform point in the closed ball of radius `radius` around `center`.
    pub fn in_ball(&mut self, center: &[f64], radius: f64) -> Vec<f64> {
        loop {
            let v: Vec<f64> = center.iter().map(|_| self.uniform_in(-1.0, 1.0)).collect();
            if v.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
                return center.iter().zip(v).map(|(c, x)| c + radius * x).collect();
            }
        }
    }
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical inverse of `index` in the given base.
fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    r
}

/// Halton point in `[0,1)^dim` (dim ≤ 16).
pub fn halton(index: u64, dim: usize) -> Vec<f64> {
    assert!(dim <= PRIMES.len(), "halton sequence supports up to 16 dimensions");
    PRIMES[..dim].iter().map(|&b| radical_inverse(index, b)).collect()
}

/// Quasi-random points in the closed ball, produced from a rotated Halton
/// sequence by rejection; the pattern shift is drawn from `stream`.
pub fn quasi_random_ball(
    stream: &mut SampleStream,
    center: &[f64],
    radius: f64,
    count: usize,
) -> Vec<Vec<f64>> {
    let dim = center.len();
    let shift: Vec<f64> = (0..dim).map(|_| stream.uniform()).collect();
    let mut out = Vec::with_capacity(count);
    let mut index = 1u64;
    while out.len() < count && index < 64 * count as u64 + 64 {
        let h = halton(index, dim);
        index += 1;
        let v: Vec<f64> = h
            .iter()
            .zip(&shift)
            .map(|(a, s)| 2.0 * ((a + s).fract()) - 1.0)
            .collect();
        if v.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
            out.push(center.iter().zip(v).map(|(c, x)| c + radius * x).collect());
        }
    }
    out
}
