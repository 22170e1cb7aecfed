//! Monte Carlo estimators built on repeated cluster growth.
//!
//! Every estimator grows the cluster of a fixed source once per sample; all
//! targets are read off the same clusters. Sample `i` uses stream `i` of the
//! base seed, so two estimators given the same seed see the same bonds.

use serde::Serialize;

use super::estimate::{Accumulate, Estimate, HitCounts, VectorMoments};
use super::runner::Runner;
use super::{check_site, grow_cluster_into, Cluster, ClusterWorkspace};
use crate::error::{PercolabError, Result};
use crate::graph::{BondGraph, Lattice};
use crate::model::SplitPoint;
use crate::rng::RngSeed;
use crate::scalar::Scalar;

/// Grows `n` clusters from `origin` and folds them into an accumulator.
#[allow(clippy::too_many_arguments)]
pub fn sample_clusters<G, A, I, O>(
    graph: &G,
    origin: usize,
    allowed: Option<&[bool]>,
    seed: u64,
    n: u64,
    runner: &Runner,
    init: I,
    observe: O,
) -> Result<A>
where
    G: BondGraph + Sync,
    A: Accumulate,
    I: Fn() -> A + Sync,
    O: Fn(&mut A, &Cluster) + Sync,
{
    check_site(graph, origin)?;
    if n == 0 {
        return Err(PercolabError::Precondition("n_samples must be at least 1".into()));
    }
    let sites = graph.site_count();
    let acc = runner.fold_chunks(n, |range| {
        let mut acc = init();
        let mut ws = ClusterWorkspace::new(sites);
        let mut cluster = Cluster::default();
        for i in range {
            grow_cluster_into(graph, origin, RngSeed::new(seed, i), allowed, &mut ws, &mut cluster);
            observe(&mut acc, &cluster);
        }
        acc
    });
    Ok(acc.expect("n >= 1"))
}

#[derive(Debug, Default)]
struct Count {
    n: u64,
    hits: u64,
}

impl Accumulate for Count {
    fn merge(&mut self, other: Self) {
        self.n += other.n;
        self.hits += other.hits;
    }
}

fn count_hits<G: BondGraph + Sync>(
    graph: &G,
    x: usize,
    y: usize,
    allowed: Option<&[bool]>,
    n: u64,
    seed: u64,
    runner: &Runner,
) -> Result<Estimate> {
    let c = sample_clusters(graph, x, allowed, seed, n, runner, Count::default, |acc, cl| {
        acc.n += 1;
        if cl.sites.contains(&y) {
            acc.hits += 1;
        }
    })?;
    Ok(Estimate::bernoulli(c.hits, c.n))
}

/// `tau_xy`: fraction of samples in which `x` and `y` are connected.
pub fn estimate_tau<G: BondGraph + Sync>(
    graph: &G,
    x: usize,
    y: usize,
    n: u64,
    seed: u64,
    runner: &Runner,
) -> Result<Estimate> {
    check_site(graph, y)?;
    if x == y {
        check_site(graph, x)?;
        if n == 0 {
            return Err(PercolabError::Precondition("n_samples must be at least 1".into()));
        }
        return Ok(Estimate::certain(1.0, n));
    }
    count_hits(graph, x, y, None, n, seed, runner)
}

/// `tau^S_xy`: connection using only sites with `members[s] == true`.
pub fn estimate_tau_restricted<G: BondGraph + Sync>(
    graph: &G,
    x: usize,
    y: usize,
    members: &[bool],
    n: u64,
    seed: u64,
    runner: &Runner,
) -> Result<Estimate> {
    check_site(graph, x)?;
    check_site(graph, y)?;
    if members.len() != graph.site_count() {
        return Err(PercolabError::Precondition("membership mask has the wrong length".into()));
    }
    if !members[x] {
        return Err(PercolabError::Precondition("x must belong to S".into()));
    }
    if x == y {
        return Ok(Estimate::certain(1.0, n.max(1)));
    }
    count_hits(graph, x, y, Some(members), n, seed, runner)
}

/// Connection frequencies from one source to every site.
#[derive(Debug, Clone, PartialEq)]
pub struct TauRow {
    pub origin: usize,
    pub counts: HitCounts,
}

impl TauRow {
    pub fn n_samples(&self) -> u64 {
        self.counts.n
    }

    pub fn estimate(&self, site: usize) -> Estimate {
        self.counts.estimate(site)
    }

    /// `T_m(origin, site) = e^(m ||origin0 - site0||) tau`.
    pub fn tilted<T: Scalar>(&self, lattice: &Lattice<T>, site: usize, m: f64) -> Estimate {
        let a = lattice.short_distance(self.origin, site) as f64;
        self.estimate(site).scaled((m * a).exp())
    }

    /// Plug-in maximum of `T_m(origin, u)` over `||u1 - origin1|| > l`.
    pub fn tilted_sup<T: Scalar>(&self, lattice: &Lattice<T>, l: f64, m: f64) -> Result<SupEstimate> {
        let mut best: Option<(usize, Estimate)> = None;
        for u in 0..self.counts.hits.len() {
            if (lattice.long_distance(self.origin, u) as f64) <= l {
                continue;
            }
            let e = self.tilted(lattice, u, m);
            if best.is_none_or(|(_, b)| e.mean > b.mean) {
                best = Some((u, e));
            }
        }
        let (u, estimate) = best.ok_or_else(|| {
            PercolabError::EmptySearchSet(format!("no site of the box lies outside the cylinder of radius {l}"))
        })?;
        Ok(SupEstimate {
            l,
            estimate,
            argmax: lattice.point(u),
        })
    }
}

/// Hit counts of every site from `origin`.
pub fn estimate_tau_row<G: BondGraph + Sync>(
    graph: &G,
    origin: usize,
    n: u64,
    seed: u64,
    runner: &Runner,
) -> Result<TauRow> {
    let sites = graph.site_count();
    let counts = sample_clusters(
        graph,
        origin,
        None,
        seed,
        n,
        runner,
        || HitCounts::new(sites),
        |acc, cl| {
            acc.n += 1;
            for &s in &cl.sites {
                acc.hits[s] += 1;
            }
        },
    )?;
    Ok(TauRow { origin, counts })
}

/// Truncated-volume mean cluster size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiEstimate {
    pub size: Estimate,
    /// Fraction of samples whose cluster reached the box boundary.
    pub boundary_fraction: f64,
}

#[derive(Debug, Default)]
struct SizeMoments {
    n: u64,
    sum: f64,
    sum_sq: f64,
    touched: u64,
}

impl Accumulate for SizeMoments {
    fn merge(&mut self, other: Self) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self.touched += other.touched;
    }
}

/// `chi` restricted to the box: mean size of the cluster of `origin`.
pub fn estimate_chi<G: BondGraph + Sync>(
    graph: &G,
    origin: usize,
    n: u64,
    seed: u64,
    runner: &Runner,
) -> Result<ChiEstimate> {
    let m = sample_clusters(graph, origin, None, seed, n, runner, SizeMoments::default, |acc, cl| {
        let s = cl.len() as f64;
        acc.n += 1;
        acc.sum += s;
        acc.sum_sq += s * s;
        acc.touched += cl.touched_boundary as u64;
    })?;
    Ok(ChiEstimate {
        size: Estimate::from_sums(m.sum, m.sum_sq, m.n),
        boundary_fraction: m.touched as f64 / m.n as f64,
    })
}

/// `T_m(x, y) = e^(m ||x0 - y0||) tau_xy`.
pub fn estimate_tilted_tau<T: Scalar>(
    lattice: &Lattice<T>,
    x: usize,
    y: usize,
    m: f64,
    n: u64,
    seed: u64,
    runner: &Runner,
) -> Result<Estimate> {
    if !(m >= 0.0) {
        return Err(PercolabError::Precondition(format!("tilt m must be >= 0, got {m}")));
    }
    let tau = estimate_tau(lattice, x, y, n, seed, runner)?;
    Ok(tau.scaled((m * lattice.short_distance(x, y) as f64).exp()))
}

/// `gamma_L = sum_{u in C_L(x), v outside} T_m(x, u) p_uv` for each `L` in
/// `ls`, all estimated from the same clusters.
///
/// Only `v` inside the box are summed: the outer region is truncated to the
/// box, so the estimate is a lower bound of the infinite-volume quantity and
/// vanishes once the cylinder covers the box.
pub fn estimate_gamma<T: Scalar>(
    lattice: &Lattice<T>,
    x: usize,
    ls: &[f64],
    m: f64,
    n: u64,
    seed: u64,
    runner: &Runner,
) -> Result<Vec<Estimate>> {
    check_site(lattice, x)?;
    if !(m >= 0.0) {
        return Err(PercolabError::Precondition(format!("tilt m must be >= 0, got {m}")));
    }
    let fiber = lattice.fiber_size();
    // escape[j * fiber + l]: probability mass leaving C_{L_j}(x) from long position l
    let mut escape = vec![0.0; ls.len() * fiber];
    for (j, &l) in ls.iter().enumerate() {
        for u in 0..fiber {
            if lattice.long_distance(u, x) as f64 > l {
                continue;
            }
            escape[j * fiber + u] = (0..fiber)
                .filter(|&v| lattice.long_distance(v, x) as f64 > l)
                .map(|v| lattice.probability(u, v))
                .sum();
        }
    }
    let fibers = lattice.site_count() / fiber;
    let tilt: Vec<f64> = (0..fibers)
        .map(|f| (m * lattice.short_distance(f * fiber, x) as f64).exp())
        .collect();
    let k = ls.len();
    let moments = sample_clusters(
        lattice,
        x,
        None,
        seed,
        n,
        runner,
        || (VectorMoments::new(k), vec![0.0; k]),
        |(acc, scratch), cl| {
            scratch.iter_mut().for_each(|s| *s = 0.0);
            for &u in &cl.sites {
                let t = tilt[u / fiber];
                let l = u % fiber;
                for (j, s) in scratch.iter_mut().enumerate() {
                    *s += t * escape[j * fiber + l];
                }
            }
            acc.push(scratch);
        },
    )?;
    Ok(moments.0.estimates())
}

impl Accumulate for (VectorMoments, Vec<f64>) {
    fn merge(&mut self, other: Self) {
        self.0.merge(other.0);
    }
}

/// Single-`L` form of [`estimate_gamma`].
pub fn estimate_gamma_l<T: Scalar>(
    lattice: &Lattice<T>,
    x: usize,
    l: f64,
    m: f64,
    n: u64,
    seed: u64,
    runner: &Runner,
) -> Result<Estimate> {
    Ok(estimate_gamma(lattice, x, &[l], m, n, seed, runner)?[0])
}

/// Plug-in estimate of `sup { T_m(0, u) : ||u1|| > L }` with its maximizer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupEstimate {
    pub l: f64,
    pub estimate: Estimate,
    pub argmax: SplitPoint,
}

/// Sup of the tilted connectivity from the origin outside the cylinder of
/// radius `l`, for each `l`, sharing one set of clusters.
pub fn estimate_tm_sup_table<T: Scalar>(
    lattice: &Lattice<T>,
    ls: &[f64],
    m: f64,
    n: u64,
    seed: u64,
    runner: &Runner,
) -> Result<Vec<SupEstimate>> {
    let p = lattice.params();
    let origin = lattice.index_of(&SplitPoint::origin(p.k(), p.d()))?;
    let row = estimate_tau_row(lattice, origin, n, seed, runner)?;
    ls.iter().map(|&l| row.tilted_sup(lattice, l, m)).collect()
}

pub fn estimate_tm_sup<T: Scalar>(
    lattice: &Lattice<T>,
    l: f64,
    m: f64,
    n: u64,
    seed: u64,
    runner: &Runner,
) -> Result<SupEstimate> {
    Ok(estimate_tm_sup_table(lattice, &[l], m, n, seed, runner)?.remove(0))
}
