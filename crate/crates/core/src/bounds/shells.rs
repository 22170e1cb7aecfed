use serde::Serialize;

use crate::error::{PercolabError, Result};
use crate::graph::Lattice;
use crate::model::{l1_sphere_sizes, SplitPoint};
use crate::sampler::{sample_clusters, Accumulate, Estimate, Runner, VectorMoments};
use crate::scalar::Scalar;

/// `n -> sum_{||x0|| = n} sum_{x1} tau_0x`, truncated to the box.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShellTable {
    /// Number of short dimensions; with `k = 0` every shell past 0 is empty.
    pub k: usize,
    pub shells: Vec<Estimate>,
}

struct ShellAcc(VectorMoments, Vec<f64>);

impl Accumulate for ShellAcc {
    fn merge(&mut self, other: Self) {
        self.0.merge(other.0);
    }
}

/// Per-shell connectivity sums from cluster growth at the origin.
pub fn fiber_sums<T: Scalar>(
    lattice: &Lattice<T>,
    n: u64,
    seed: u64,
    runner: &Runner,
) -> Result<ShellTable> {
    let p = lattice.params();
    let origin = lattice.index_of(&SplitPoint::origin(p.k(), p.d()))?;
    let shells = lattice.lattice_box().max_short_norm() as usize + 1;
    let acc = sample_clusters(
        lattice,
        origin,
        None,
        seed,
        n,
        runner,
        || ShellAcc(VectorMoments::new(shells), vec![0.0; shells]),
        |ShellAcc(moments, scratch), cl| {
            scratch.iter_mut().for_each(|s| *s = 0.0);
            for &u in &cl.sites {
                scratch[lattice.short_norm(u) as usize] += 1.0;
            }
            moments.push(scratch);
        },
    )?;
    Ok(ShellTable {
        k: p.k(),
        shells: acc.0.estimates(),
    })
}

/// Smallest `n0 >= 1` such that every tabulated shell `n >= n0` has
/// `mean + 2 stderr < lambda`.
pub fn find_n0(table: &ShellTable, lambda: f64) -> Result<u64> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(PercolabError::Precondition(format!("lambda must lie in (0, 1), got {lambda}")));
    }
    let last_bad = table
        .shells
        .iter()
        .enumerate()
        .rev()
        .find(|(_, e)| e.upper(2.0) >= lambda);
    match last_bad {
        None => Ok(1),
        Some((n, e)) => {
            // with k >= 1 the shells past the table are unobserved
            if table.k > 0 && n + 1 == table.shells.len() {
                Err(PercolabError::NoQualifyingN0 {
                    shell: n,
                    value: e.upper(2.0),
                    lambda,
                })
            } else {
                Ok(n as u64 + 1)
            }
        }
    }
}

/// `m` from `e^-(m + delta) = lambda^(1/n0)`, i.e. `m = -ln(lambda)/n0 - delta`.
pub fn mass_from_lambda<T: Scalar>(lambda: T, n0: u64, delta: T) -> Result<T> {
    if !(lambda > T::zero() && lambda < T::one()) {
        return Err(PercolabError::Precondition(format!("lambda must lie in (0, 1), got {lambda}")));
    }
    if n0 == 0 {
        return Err(PercolabError::Precondition("n0 must be at least 1".into()));
    }
    if !(delta > T::zero()) {
        return Err(PercolabError::NonPositiveMargin(delta.as_f64()));
    }
    let m = -lambda.ln() / T::lit(n0 as f64) - delta;
    if !(m > T::zero()) {
        return Err(PercolabError::NonPositiveMass { m: m.as_f64() });
    }
    Ok(m)
}

/// Default margin: half of the available decay rate `-ln(lambda)/n0`.
pub fn default_delta<T: Scalar>(lambda: T, n0: u64) -> T {
    -lambda.ln() / T::lit(n0 as f64) / T::lit(2.0)
}

/// Truncated `chi_m = sum_x e^(m ||x0||) tau_0x` plus a tail estimate for the
/// short shells the box does not fully contain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiMReport {
    pub partial: Estimate,
    /// `sum_{n > r} |S_k(n)| e^(m n) lambda^-1 e^(-n ln(1/lambda) / n0)`.
    pub tail: f64,
    /// First shell covered by the tail.
    pub tail_from: u64,
    /// Decay margin `-ln(lambda)/n0 - m` of the tail series.
    pub margin: f64,
}

impl ChiMReport {
    pub fn total(&self) -> f64 {
        self.partial.mean + self.tail
    }
}

/// Tilted susceptibility at mass `m`, with the tail bound derived from the
/// per-fiber decay `sum_{x1} tau_0x <= lambda^floor(||x0||/n0)`.
pub fn chi_m_partial<T: Scalar>(
    lattice: &Lattice<T>,
    m: f64,
    lambda: f64,
    n0: u64,
    n: u64,
    seed: u64,
    runner: &Runner,
) -> Result<ChiMReport> {
    if !(lambda > 0.0 && lambda < 1.0) || n0 == 0 {
        return Err(PercolabError::Precondition("need lambda in (0, 1) and n0 >= 1".into()));
    }
    if !(m >= 0.0) {
        return Err(PercolabError::Precondition(format!("m must be >= 0, got {m}")));
    }
    let rate = -lambda.ln() / n0 as f64;
    let margin = rate - m;
    if !(margin > 0.0) {
        return Err(PercolabError::NonPositiveMargin(margin));
    }
    let p = lattice.params();
    let origin = lattice.index_of(&SplitPoint::origin(p.k(), p.d()))?;
    let bx = lattice.lattice_box();
    let max_norm = bx.max_short_norm() as usize;
    let tilt: Vec<f64> = (0..=max_norm).map(|a| (m * a as f64).exp()).collect();
    let acc = sample_clusters(
        lattice,
        origin,
        None,
        seed,
        n,
        runner,
        || VectorMoments::new(1),
        |acc, cl| {
            let s: f64 = cl.sites.iter().map(|&u| tilt[lattice.short_norm(u) as usize]).sum();
            acc.push(&[s]);
        },
    )?;
    // shells up to the inner radius lie entirely inside the box
    let inner = bx
        .lo0()
        .iter()
        .zip(bx.hi0())
        .map(|(lo, hi)| lo.unsigned_abs().min(hi.unsigned_abs()))
        .min()
        .unwrap_or(0);
    let tail = if p.beta() <= T::zero() {
        // every off-origin connectivity vanishes
        0.0
    } else {
        tail_sum(p.k(), inner + 1, margin, 1.0 / lambda)
    };
    Ok(ChiMReport {
        partial: acc.estimate(0),
        tail,
        tail_from: inner + 1,
        margin,
    })
}

fn tail_sum(k: usize, from: u64, margin: f64, c1: f64) -> f64 {
    let mut n_max = from + 64;
    loop {
        let sizes = l1_sphere_sizes(k, n_max);
        let terms = (from..=n_max).map(|n| sizes[n as usize] as f64 * c1 * (-margin * n as f64).exp());
        let (sum, last) = terms.fold((0.0, 0.0), |(s, _), t| (s + t, t));
        let decaying = n_max as f64 > (k as f64) / margin;
        if (decaying && last <= 1e-17 * sum.max(1e-300)) || sum == 0.0 || n_max > 1 << 22 {
            return sum;
        }
        n_max *= 2;
    }
}
