//! Deterministic Monte Carlo execution.
//!
//! Paths are grouped into fixed-size chunks. Each chunk folds its paths, in
//! index order, into a fresh accumulator; chunk accumulators are then merged
//! sequentially in chunk order. The chunk layout depends only on the path
//! count, so the floating-point result is the same whether the chunks ran on
//! one thread or many.

use num_complex::Complex64;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::stochastic::{PhaseSampler, SeedSpec};

/// Paths per work item.
pub const DEFAULT_CHUNK: u64 = 2048;

/// How Monte Carlo chunks are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    /// Rayon work-stealing over chunks. Falls back to sequential when the
    /// crate is built without the `parallel` feature.
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

/// Mergeable partial result of a chunk of paths.
pub trait Accumulator: Send {
    fn merge(&mut self, other: Self);
}

/// Folds `body(acc, path_index)` over `0..n_paths` with a deterministic
/// chunked reduction.
pub fn map_reduce<A, I, F>(n_paths: u64, chunk: u64, exec: Exec, init: I, body: F) -> A
where
    A: Accumulator,
    I: Fn() -> A + Sync + Send,
    F: Fn(&mut A, u64) + Sync + Send,
{
    let chunk = chunk.max(1);
    let n_chunks = n_paths.div_ceil(chunk);
    let run = |c: u64| {
        let mut acc = init();
        for path in c * chunk..((c + 1) * chunk).min(n_paths) {
            body(&mut acc, path);
        }
        acc
    };
    let parts: Vec<A> = match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => (0..n_chunks).into_par_iter().map(run).collect(),
        _ => (0..n_chunks).map(run).collect(),
    };
    let mut parts = parts.into_iter();
    let mut total = parts.next().unwrap_or_else(&init);
    for part in parts {
        total.merge(part);
    }
    total
}

/// Running mean and sum of squared deviations (Welford / Chan et al.).
/// Identical samples give exactly zero variance.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero with fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn estimate(&self) -> EstimateWithError {
        EstimateWithError {
            mean: self.mean,
            std_err: (self.variance() / self.n.max(1) as f64).sqrt(),
            n_paths: self.n,
        }
    }
}

impl Accumulator for Welford {
    fn merge(&mut self, other: Self) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let (na, nb) = (self.n as f64, other.n as f64);
        self.mean += delta * nb / n as f64;
        self.m2 += other.m2 + delta * delta * na * nb / n as f64;
        self.n = n;
    }
}

impl<A: Accumulator, B: Accumulator> Accumulator for (A, B) {
    fn merge(&mut self, other: Self) {
        self.0.merge(other.0);
        self.1.merge(other.1);
    }
}

impl Accumulator for Vec<Welford> {
    fn merge(&mut self, other: Self) {
        for (a, b) in self.iter_mut().zip(other) {
            a.merge(b);
        }
    }
}

/// Entrywise Welford over complex samples; the variance of an entry is
/// `E|z − E z|²` (sum of real and imaginary variances).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexWelford {
    n: u64,
    mean: Vec<Complex64>,
    m2: Vec<f64>,
}

impl ComplexWelford {
    pub fn new(len: usize) -> Self {
        Self {
            n: 0,
            mean: vec![Complex64::new(0.0, 0.0); len],
            m2: vec![0.0; len],
        }
    }

    pub fn push(&mut self, sample: impl IntoIterator<Item = Complex64>) {
        self.n += 1;
        let inv = 1.0 / self.n as f64;
        for ((mean, m2), x) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(sample) {
            let delta = x - *mean;
            *mean += delta * inv;
            *m2 += (delta * (x - *mean).conj()).re;
        }
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> &[Complex64] {
        &self.mean
    }

    /// Standard error of each entry's mean.
    pub fn std_err(&self) -> Vec<f64> {
        if self.n < 2 {
            return vec![0.0; self.m2.len()];
        }
        let scale = 1.0 / ((self.n - 1) as f64 * self.n as f64);
        self.m2.iter().map(|m2| (m2 * scale).sqrt()).collect()
    }
}

impl Accumulator for ComplexWelford {
    fn merge(&mut self, other: Self) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other;
            return;
        }
        let n = (self.n + other.n) as f64;
        let (na, nb) = (self.n as f64, other.n as f64);
        for i in 0..self.mean.len() {
            let delta = other.mean[i] - self.mean[i];
            self.mean[i] += delta * (nb / n);
            self.m2[i] += other.m2[i] + delta.norm_sqr() * na * nb / n;
        }
        self.n += other.n;
    }
}

/// A Monte Carlo estimate of a scalar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateWithError {
    pub mean: f64,
    /// Sample standard deviation over `√n_paths`.
    pub std_err: f64,
    pub n_paths: u64,
}

impl EstimateWithError {
    /// `|mean − reference| ≤ k·std_err`.
    pub fn within(&self, reference: f64, k: f64) -> bool {
        (self.mean - reference).abs() <= k * self.std_err
    }
}

/// Settings shared by every Monte Carlo operation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub n_paths: u64,
    pub seed: SeedSpec,
    pub sampler: PhaseSampler,
    pub exec: Exec,
}

impl McConfig {
    pub fn new(n_paths: u64, seed: SeedSpec) -> Self {
        Self {
            n_paths,
            seed,
            sampler: PhaseSampler::default(),
            exec: Exec::default(),
        }
    }

    pub fn with_sampler(mut self, sampler: PhaseSampler) -> Self {
        self.sampler = sampler;
        self
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn with_seed(mut self, seed: SeedSpec) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_paths(mut self, n_paths: u64) -> Self {
        self.n_paths = n_paths;
        self
    }

    /// At least two paths are needed for a variance estimate.
    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 2 {
            return Err(Error::domain(format!(
                "Monte Carlo needs n_paths >= 2 for an error estimate, got {}",
                self.n_paths
            )));
        }
        self.sampler.validate()
    }
}
