//! Deterministic parallel sampling.
//!
//! Work is split over a fixed number of logical workers. Worker `w` draws
//! from a ChaCha8 stream seeded with the master seed and stream number
//! `w`, and results are merged in worker order, so output depends only on
//! `(seed, workers)` and never on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Logical worker count used unless a caller overrides it.
pub const DEFAULT_WORKERS: usize = 8;

pub fn worker_rng(seed: u64, worker: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(worker as u64);
    rng
}

/// Splits `total` into `workers` near-equal chunks, larger chunks first.
pub fn split_counts(total: usize, workers: usize) -> Vec<usize> {
    let workers = workers.max(1);
    let base = total / workers;
    let rem = total % workers;
    (0..workers).map(|w| base + usize::from(w < rem)).collect()
}

/// Runs `job(worker, rng, count)` for every worker in parallel and returns
/// the results in worker order.
pub fn run_workers<T, F>(seed: u64, total: usize, workers: usize, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng, usize) -> T + Sync,
{
    split_counts(total, workers)
        .into_par_iter()
        .enumerate()
        .map(|(w, count)| {
            let mut rng = worker_rng(seed, w);
            job(w, &mut rng, count)
        })
        .collect()
}

/// Mergeable running mean and variance (Chan et al. pairwise update).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &RunningStats) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}
