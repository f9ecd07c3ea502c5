//! Deterministic fan-out of Monte-Carlo trials.
//!
//! Trial `i` of family `f` always draws from `RngStream::for_trial(seed, f, i)`
//! and results come back in trial order, so every reduction done on the
//! returned vector is independent of the worker count.

use crate::rng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MonteCarlo {
    pub seed: u64,
    pub workers: usize,
}

impl MonteCarlo {
    pub fn new(seed: u64, workers: usize) -> Self {
        Self { seed, workers: workers.max(1) }
    }

    pub fn serial(seed: u64) -> Self {
        Self::new(seed, 1)
    }

    /// Same worker count, different seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, workers: self.workers }
    }

    pub fn stream(&self, family: u64, index: usize) -> RngStream {
        RngStream::for_trial(self.seed, family, index as u64)
    }

    /// Run `n` trials of `f`, each with its own stream, results in trial order.
    pub fn map<T, F>(&self, family: u64, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize, &mut RngStream) -> T + Sync + Send,
    {
        let seed = self.seed;
        self.map_indices(n, move |i| {
            let mut rng = RngStream::for_trial(seed, family, i as u64);
            f(i, &mut rng)
        })
    }

    /// Ordered parallel map over `0..n` without random streams.
    pub fn map_indices<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.workers > 1 && n > 1 {
            use rayon::prelude::*;
            if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(self.workers).build() {
                return pool.install(|| (0..n).into_par_iter().map(&f).collect());
            }
        }
        (0..n).map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worker_count_does_not_change_results() {
        let run = |w| {
            MonteCarlo::new(11, w).map(3, 257, |i, rng| (i, rng.gaussian().to_bits()))
        };
        let one = run(1);
        assert_eq!(one, run(4));
        assert_eq!(one, run(8));
        assert!(one.iter().enumerate().all(|(i, (j, _))| i == *j));
    }
}
