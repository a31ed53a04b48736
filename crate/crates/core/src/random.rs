//! Seeded, substream-separated randomness.
//!
//! Each concern (data generation, batch order, Langevin noise, ...) draws from
//! its own ChaCha stream so switching one of them off leaves the others
//! untouched.

use rand::seq::index;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{ArmlError, Result};

/// Well-known stream ids.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Data = 1,
    Batches = 2,
    Noise = 3,
    Init = 4,
    Diagnostics = 5,
    MainData = 6,
}

#[derive(Clone, Debug)]
pub struct RngState {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl RngState {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        RngState {
            seed,
            stream_id,
            inner,
        }
    }

    pub fn for_stream(seed: u64, stream: Stream) -> Self {
        Self::new(seed, stream as u64)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn gaussian_vector(&mut self, dim: usize, mean: f64, std: f64) -> Result<Vec<f64>> {
        sample_gaussian_vector(self, dim, mean, std)
    }

    /// Sorted minibatch of `size` distinct indices from `[0, n)`. Returns all
    /// indices in order when `size >= n`.
    pub fn batch(&mut self, n: usize, size: usize) -> Vec<usize> {
        if size >= n {
            return (0..n).collect();
        }
        let mut idx = index::sample(&mut self.inner, n, size).into_vec();
        idx.sort_unstable();
        idx
    }
}

impl RngCore for RngState {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }
}

/// `dim` i.i.d. draws from `N(mean, std^2)`.
pub fn sample_gaussian_vector(
    rng: &mut RngState,
    dim: usize,
    mean: f64,
    std: f64,
) -> Result<Vec<f64>> {
    if !(std >= 0.0) || !std.is_finite() {
        return Err(ArmlError::arg(format!("std must be finite and >= 0, got {std}")));
    }
    if dim == 0 {
        return Err(ArmlError::arg("dim must be >= 1"));
    }
    Ok((0..dim)
        .map(|_| mean + std * rng.standard_normal())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_std_is_degenerate() {
        let mut rng = RngState::new(7, 0);
        assert_eq!(rng.gaussian_vector(3, 0.0, 0.0).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn same_seed_and_stream_repeat() {
        let a = RngState::new(42, 3).gaussian_vector(16, 1.0, 2.0).unwrap();
        let b = RngState::new(42, 3).gaussian_vector(16, 1.0, 2.0).unwrap();
        assert_eq!(a, b);
        let c = RngState::new(42, 4).gaussian_vector(16, 1.0, 2.0).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn negative_std_rejected() {
        let mut rng = RngState::new(1, 1);
        assert!(rng.gaussian_vector(2, 0.0, -1.0).is_err());
        assert!(rng.gaussian_vector(0, 0.0, 1.0).is_err());
    }

    #[test]
    fn large_sample_moments() {
        let dim = 100_000;
        let xs = RngState::new(9, 1).gaussian_vector(dim, 0.0, 1.0).unwrap();
        let mean = xs.iter().sum::<f64>() / dim as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (dim as f64 - 1.0);
        let tol = 4.0 / (dim as f64).sqrt();
        assert!(mean.abs() < tol, "mean {mean}");
        assert!((var.sqrt() - 1.0).abs() < tol, "std {}", var.sqrt());
    }

    #[test]
    fn distinct_streams_look_independent() {
        let n = 50_000;
        let a = RngState::new(5, 1).gaussian_vector(n, 0.0, 1.0).unwrap();
        let b = RngState::new(5, 2).gaussian_vector(n, 0.0, 1.0).unwrap();
        let corr = a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / n as f64;
        assert!(corr.abs() < 4.0 / (n as f64).sqrt(), "corr {corr}");
    }

    #[test]
    fn batches_are_sorted_and_distinct() {
        let mut rng = RngState::new(3, Stream::Batches as u64);
        let b = rng.batch(100, 10);
        assert_eq!(b.len(), 10);
        assert!(b.windows(2).all(|w| w[0] < w[1]));
        assert!(b.iter().all(|&i| i < 100));
        assert_eq!(rng.batch(5, 10), vec![0, 1, 2, 3, 4]);
    }
}
