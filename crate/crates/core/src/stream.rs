//! Reproducible white-increment streams shared between coupled integrators.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::noise::sample_white_increment;

/// Per-path stream of `N(0, dt)` increment vectors. Every drawn value is
/// hashed, so two consumers can prove they saw the same noise.
#[derive(Clone)]
pub struct IncrementStream {
    rng: ChaCha20Rng,
    modes: usize,
    dt: f64,
    hasher: Sha256,
    drawn: u64,
}

impl std::fmt::Debug for IncrementStream {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("IncrementStream")
            .field("modes", &self.modes)
            .field("dt", &self.dt)
            .field("drawn", &self.drawn)
            .finish()
    }
}

impl IncrementStream {
    pub fn new(seed: u64, path: u64, modes: usize, dt: f64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(path);
        Self {
            rng,
            modes,
            dt,
            hasher: Sha256::new(),
            drawn: 0,
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn drawn(&self) -> u64 {
        self.drawn
    }

    pub fn next_increment(&mut self) -> Result<Vec<f64>> {
        let v = sample_white_increment(self.modes, self.dt, &mut self.rng)?;
        for x in &v {
            self.hasher.update(x.to_le_bytes());
        }
        self.drawn += 1;
        Ok(v)
    }

    pub fn next_block(&mut self, count: usize) -> Result<Vec<Vec<f64>>> {
        (0..count).map(|_| self.next_increment()).collect()
    }

    /// Hex SHA-256 of everything drawn so far.
    pub fn checksum(&self) -> String {
        hex::encode(self.hasher.clone().finalize())
    }

    /// Generator for randomness that must not perturb the increments, such
    /// as the initial driver sample.
    pub fn side_rng(seed: u64, path: u64) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        rng.set_stream(path);
        rng
    }
}

/// Sum of a block of increments, i.e. the increment over the union of the substeps.
pub fn sum_increments(block: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; block.first().map_or(0, Vec::len)];
    for inc in block {
        for (o, v) in out.iter_mut().zip(inc) {
            *o += v;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_checksum() {
        let mut a = IncrementStream::new(7, 3, 10, 0.01);
        let mut b = IncrementStream::new(7, 3, 10, 0.01);
        assert_eq!(a.next_block(5).unwrap(), b.next_block(5).unwrap());
        assert_eq!(a.checksum(), b.checksum());
        let mut c = IncrementStream::new(7, 4, 10, 0.01);
        c.next_block(5).unwrap();
        assert_ne!(a.checksum(), c.checksum());
    }

    #[test]
    fn sums_blocks() {
        let s = sum_increments(&[vec![1.0, 2.0], vec![0.5, -1.0]]);
        assert_eq!(s, vec![1.5, 1.0]);
        assert!(sum_increments(&[]).is_empty());
    }
}
