use serde::{Deserialize, Serialize};

/// Monte Carlo estimate of a probability or expectation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: u64,
}

impl Estimate {
    /// Indicator estimator: `hits` successes out of `n` draws, with the
    /// Bernoulli standard error `sqrt(mean (1 - mean) / n)`.
    pub fn bernoulli(hits: u64, n: u64) -> Self {
        assert!(n > 0, "estimate needs at least one sample");
        let mean = hits as f64 / n as f64;
        Self {
            mean,
            stderr: (mean * (1.0 - mean) / n as f64).max(0.0).sqrt(),
            n_samples: n,
        }
    }

    /// Sample mean with the sample-variance standard error.
    pub fn from_sums(sum: f64, sum_sq: f64, n: u64) -> Self {
        assert!(n > 0, "estimate needs at least one sample");
        let nf = n as f64;
        let mean = sum / nf;
        let stderr = if n > 1 {
            let var = ((sum_sq - sum * mean) / (nf - 1.0)).max(0.0);
            (var / nf).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            stderr,
            n_samples: n,
        }
    }

    /// A value known without sampling error.
    pub fn certain(value: f64, n: u64) -> Self {
        Self {
            mean: value,
            stderr: 0.0,
            n_samples: n,
        }
    }

    /// Scales mean and standard error by the same factor.
    pub fn scaled(self, factor: f64) -> Self {
        Self {
            mean: self.mean * factor,
            stderr: self.stderr * factor.abs(),
            n_samples: self.n_samples,
        }
    }

    pub fn upper(&self, sigmas: f64) -> f64 {
        self.mean + sigmas * self.stderr
    }

    pub fn lower(&self, sigmas: f64) -> f64 {
        self.mean - sigmas * self.stderr
    }
}

/// Accumulators that can be combined across chunks of samples.
pub trait Accumulate: Send {
    fn merge(&mut self, other: Self);
}

/// Per-component `(count, sum, sum of squares)` of a vector-valued
/// per-sample observable.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorMoments {
    pub n: u64,
    pub sum: Vec<f64>,
    pub sum_sq: Vec<f64>,
}

impl VectorMoments {
    pub fn new(len: usize) -> Self {
        Self {
            n: 0,
            sum: vec![0.0; len],
            sum_sq: vec![0.0; len],
        }
    }

    pub fn push(&mut self, values: &[f64]) {
        self.n += 1;
        for ((s, s2), v) in self.sum.iter_mut().zip(self.sum_sq.iter_mut()).zip(values) {
            *s += v;
            *s2 += v * v;
        }
    }

    pub fn estimate(&self, i: usize) -> Estimate {
        Estimate::from_sums(self.sum[i], self.sum_sq[i], self.n)
    }

    pub fn estimates(&self) -> Vec<Estimate> {
        (0..self.sum.len()).map(|i| self.estimate(i)).collect()
    }
}

impl Accumulate for VectorMoments {
    fn merge(&mut self, other: Self) {
        self.n += other.n;
        for (a, b) in self.sum.iter_mut().zip(other.sum) {
            *a += b;
        }
        for (a, b) in self.sum_sq.iter_mut().zip(other.sum_sq) {
            *a += b;
        }
    }
}

/// Per-site hit counts: how often each site joined the sampled cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct HitCounts {
    pub n: u64,
    pub hits: Vec<u64>,
}

impl HitCounts {
    pub fn new(sites: usize) -> Self {
        Self {
            n: 0,
            hits: vec![0; sites],
        }
    }

    pub fn estimate(&self, site: usize) -> Estimate {
        Estimate::bernoulli(self.hits[site], self.n)
    }
}

impl Accumulate for HitCounts {
    fn merge(&mut self, other: Self) {
        self.n += other.n;
        for (a, b) in self.hits.iter_mut().zip(other.hits) {
            *a += b;
        }
    }
}
