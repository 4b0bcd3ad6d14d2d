//! Reproducible replicate fan-out.
//!
//! Replicate `i` draws from its own ChaCha stream: the master seed keys the
//! generator and `i` selects the stream, so the draws of a replicate do not
//! depend on which worker runs it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Replicate count, master seed and optional worker count for a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonteCarlo {
    pub replicates: usize,
    pub seed: u64,
    /// `None` uses rayon's global pool.
    pub workers: Option<usize>,
}

impl MonteCarlo {
    pub fn new(replicates: usize, seed: u64) -> Self {
        Self {
            replicates,
            seed,
            workers: None,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::range("replicates", 0, 1, usize::MAX));
        }
        if self.workers == Some(0) {
            return Err(Error::range("workers", 0, 1, usize::MAX));
        }
        Ok(())
    }
}

/// Generator for replicate `index` under `seed`.
pub fn replicate_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Run `draw` once per replicate, returning results in replicate order.
///
/// `init` builds per-worker scratch space; `draw` must leave no state in it
/// that influences later replicates.
pub(crate) fn run_replicates<S, I, F>(config: &MonteCarlo, init: I, draw: F) -> Result<Vec<f64>>
where
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, &mut ChaCha8Rng) -> f64 + Sync + Send,
{
    config.validate()?;
    let seed = config.seed;
    let job = || {
        (0..config.replicates as u64)
            .into_par_iter()
            .map_init(&init, |scratch, i| draw(scratch, &mut replicate_rng(seed, i)))
            .collect::<Vec<f64>>()
    };
    match config.workers {
        None => Ok(job()),
        Some(workers) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

/// Replicate draws of an estimator, in replicate order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    values: Vec<f64>,
    seed: u64,
}

impl EmpiricalDistribution {
    pub fn new(values: Vec<f64>, seed: u64) -> Self {
        Self { values, seed }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn replicates(&self) -> usize {
        self.values.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Sample standard deviation (divisor `R - 1`).
    pub fn std_dev(&self) -> f64 {
        let n = self.values.len();
        if n < 2 {
            return 0.0;
        }
        let mean = self.mean();
        let ss: f64 = self.values.iter().map(|v| (v - mean) * (v - mean)).sum();
        (ss / (n - 1) as f64).sqrt()
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        self.std_dev() / (self.values.len() as f64).sqrt()
    }

    /// Distinct values with their counts, ascending.
    pub fn tallies(&self) -> Vec<(f64, usize)> {
        let mut sorted = self.values.clone();
        sorted.sort_by(f64::total_cmp);
        let mut out: Vec<(f64, usize)> = Vec::new();
        for v in sorted {
            match out.last_mut() {
                Some((last, count)) if last.to_bits() == v.to_bits() => *count += 1,
                _ => out.push((v, 1)),
            }
        }
        out
    }
}
