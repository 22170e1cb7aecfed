//! Deterministic parallel execution over sample indices.
//!
//! Samples are cut into fixed-size chunks independent of the worker count.
//! Each chunk accumulates in index order and chunk results are merged in
//! ascending order, so the output is bit-identical for any number of
//! workers.

use std::ops::Range;
use std::sync::Arc;

use rayon::prelude::*;

use super::estimate::Accumulate;
use crate::error::{PercolabError, Result};

/// Samples per chunk.
pub const CHUNK: u64 = 1024;

#[derive(Clone)]
pub struct Runner {
    workers: usize,
    pool: Option<Arc<rayon::ThreadPool>>,
}

impl std::fmt::Debug for Runner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Runner").field("workers", &self.workers).finish()
    }
}

impl Default for Runner {
    fn default() -> Self {
        let workers = std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1);
        Self::new(workers).unwrap_or_else(|_| Self::serial())
    }
}

impl Runner {
    /// Single-threaded reference execution.
    pub fn serial() -> Self {
        Self {
            workers: 1,
            pool: None,
        }
    }

    pub fn new(workers: usize) -> Result<Self> {
        if workers <= 1 {
            return Ok(Self::serial());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| PercolabError::Precondition(format!("thread pool: {e}")))?;
        Ok(Self {
            workers,
            pool: Some(Arc::new(pool)),
        })
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Runs `work` on each chunk of `0..n` and merges the results in chunk
    /// order. Returns `None` when `n == 0`.
    pub fn fold_chunks<A, F>(&self, n: u64, work: F) -> Option<A>
    where
        A: Accumulate,
        F: Fn(Range<u64>) -> A + Sync,
    {
        let chunks = n.div_ceil(CHUNK);
        let range = |c: u64| c * CHUNK..((c + 1) * CHUNK).min(n);
        let parts: Vec<A> = match &self.pool {
            None => (0..chunks).map(|c| work(range(c))).collect(),
            Some(pool) => pool.install(|| {
                (0..chunks)
                    .into_par_iter()
                    .map(|c| work(range(c)))
                    .collect()
            }),
        };
        let mut iter = parts.into_iter();
        let mut acc = iter.next()?;
        for part in iter {
            acc.merge(part);
        }
        Some(acc)
    }

    /// Maps `work` over `items` in parallel, preserving order.
    pub fn map<I, O, F>(&self, items: &[I], work: F) -> Vec<O>
    where
        I: Sync,
        O: Send,
        F: Fn(&I) -> O + Sync + Send,
    {
        match &self.pool {
            None => items.iter().map(work).collect(),
            Some(pool) => pool.install(|| items.par_iter().map(work).collect()),
        }
    }
}
