//! Deterministic random streams.
//!
//! Every (master seed, run index, step) triple maps to its own ChaCha8
//! stream, so two runs that share a [`StreamKey`] draw identical mini-batches
//! regardless of the optimizer they drive or the thread they run on.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const SAMPLING_TAG: &[u8; 16] = b"minibatch-sample";

/// Identifies the sampling stream of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub master_seed: u64,
    pub run_index: u64,
}

impl StreamKey {
    pub fn new(master_seed: u64, run_index: u64) -> Self {
        StreamKey {
            master_seed,
            run_index,
        }
    }

    /// The generator used for the mini-batch drawn at step `t`.
    pub fn rng_for_step(&self, t: u64) -> ChaCha8Rng {
        let mut seed = [0u8; 32];
        seed[..8].copy_from_slice(&self.master_seed.to_le_bytes());
        seed[8..16].copy_from_slice(&self.run_index.to_le_bytes());
        seed[16..].copy_from_slice(SAMPLING_TAG);
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(t);
        rng
    }
}

/// Fills `out` with `b` indices drawn i.i.d. uniformly from `0..n`.
pub fn sample_indices<R: Rng>(rng: &mut R, n: usize, b: usize, out: &mut Vec<usize>) {
    out.clear();
    out.extend((0..b).map(|_| rng.random_range(0..n)));
}

/// A seeded standard-normal vector scaled by `scale`.
pub fn gaussian_vector(seed: u64, dim: usize, scale: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect()
}
