//! Named, reproducible random streams.
//!
//! Each stream is a ChaCha8 generator keyed by SHA-256 of `(seed, label)`.
//! Adding a new labelled consumer never shifts the draws of existing streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MOBILITY: &str = "mobility";
pub const TRAFFIC: &str = "traffic";
pub const MAC_BACKOFF: &str = "mac-backoff";
pub const RTR_JITTER: &str = "rtr-jitter";

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    label: String,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, label: &str) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(seed.to_le_bytes());
        hasher.update(label.as_bytes());
        let key: [u8; 32] = hasher.finalize().into();
        RngStream {
            seed,
            label: label.to_string(),
            rng: ChaCha8Rng::from_seed(key),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Uniform draw from `[lo, hi)`; `lo == hi` returns `lo`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> Result<f64> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::InvalidArgument(format!(
                "empty or non-finite range [{lo}, {hi})"
            )));
        }
        if lo == hi {
            return Ok(lo);
        }
        Ok(self.rng.gen_range(lo..hi))
    }

    /// Uniform integer in `[0, n)`.
    pub fn below(&mut self, n: u64) -> Result<u64> {
        if n == 0 {
            return Err(Error::InvalidArgument("empty integer range [0, 0)".into()));
        }
        Ok(self.rng.gen_range(0..n))
    }

    pub fn unit(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_and_label_repeat() {
        let mut a = RngStream::new(7, MOBILITY);
        let mut b = RngStream::new(7, MOBILITY);
        for _ in 0..100 {
            assert_eq!(a.unit().to_bits(), b.unit().to_bits());
        }
    }

    #[test]
    fn labels_give_independent_streams() {
        let mut a = RngStream::new(7, MOBILITY);
        let mut b = RngStream::new(7, TRAFFIC);
        let xs: Vec<u64> = (0..16).map(|_| a.unit().to_bits()).collect();
        let ys: Vec<u64> = (0..16).map(|_| b.unit().to_bits()).collect();
        assert_ne!(xs, ys);
    }

    #[test]
    fn uniform_mean_is_centered() {
        let mut s = RngStream::new(1, "stat");
        let n = 1_000_000;
        let sum: f64 = (0..n).map(|_| s.uniform(0.0, 1.0).unwrap()).sum();
        let mean = sum / n as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn empty_ranges_rejected() {
        let mut s = RngStream::new(1, "x");
        assert!(s.uniform(2.0, 1.0).is_err());
        assert!(s.uniform(f64::NAN, 1.0).is_err());
        assert!(s.below(0).is_err());
        assert_eq!(s.uniform(3.0, 3.0).unwrap(), 3.0);
    }
}
