//! Bond configurations, connected components and lazy cluster growth.

mod estimate;
mod estimators;
mod runner;

pub use estimate::{Accumulate, Estimate, HitCounts, VectorMoments};
pub use estimators::{
    estimate_chi, estimate_gamma, estimate_gamma_l, estimate_tau, estimate_tau_restricted,
    estimate_tau_row, estimate_tilted_tau, estimate_tm_sup, estimate_tm_sup_table, sample_clusters,
    ChiEstimate, SupEstimate, TauRow,
};
pub use runner::{Runner, CHUNK};

use serde::{Deserialize, Serialize};

use crate::error::{PercolabError, Result};
use crate::graph::BondGraph;
use crate::rng::{edge_uniform, RngSeed};
use crate::union_find::UnionFind;

/// Open bonds of one sample, as site-index pairs `(a, b)` with `a < b`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Configuration {
    pub sites: usize,
    pub open: Vec<(usize, usize)>,
    pub seed: RngSeed,
}

impl Configuration {
    pub fn contains(&self, a: usize, b: usize) -> bool {
        let key = (a.min(b), a.max(b));
        self.open.binary_search(&key).is_ok()
    }
}

/// Opens each candidate edge independently with its probability.
pub fn sample_configuration<G: BondGraph>(graph: &G, seed: RngSeed) -> Configuration {
    let key = seed.stream_key();
    let mut open: Vec<(usize, usize)> = graph
        .edge_list()
        .into_iter()
        .filter(|&(_, _, p, k)| edge_uniform(key, k) < p)
        .map(|(a, b, _, _)| (a, b))
        .collect();
    open.sort_unstable();
    Configuration {
        sites: graph.site_count(),
        open,
        seed,
    }
}

/// Site partition; each site is labelled by the smallest index in its part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    labels: Vec<usize>,
}

impl Partition {
    pub fn label(&self, site: usize) -> usize {
        self.labels[site]
    }

    pub fn same(&self, a: usize, b: usize) -> bool {
        self.labels[a] == self.labels[b]
    }

    pub fn part_of(&self, site: usize) -> Vec<usize> {
        let l = self.labels[site];
        (0..self.labels.len()).filter(|&s| self.labels[s] == l).collect()
    }

    /// Parts in order of their smallest member.
    pub fn parts(&self) -> Vec<Vec<usize>> {
        let mut parts: Vec<Vec<usize>> = Vec::new();
        let mut slot = vec![usize::MAX; self.labels.len()];
        for (s, &l) in self.labels.iter().enumerate() {
            if slot[l] == usize::MAX {
                slot[l] = parts.len();
                parts.push(Vec::new());
            }
            parts[slot[l]].push(s);
        }
        parts
    }
}

/// Connected components of the open subgraph.
pub fn components(c: &Configuration) -> Partition {
    let mut uf = UnionFind::new(c.sites);
    for &(a, b) in &c.open {
        uf.union(a, b);
    }
    let mut smallest = vec![usize::MAX; c.sites];
    let roots: Vec<usize> = (0..c.sites).map(|s| uf.find(s)).collect();
    for (s, &r) in roots.iter().enumerate() {
        smallest[r] = smallest[r].min(s);
    }
    Partition {
        labels: roots.iter().map(|&r| smallest[r]).collect(),
    }
}

/// Open cluster of a site within the finite graph.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Cluster {
    /// Members in breadth-first discovery order; the origin comes first.
    pub sites: Vec<usize>,
    pub touched_boundary: bool,
}

impl Cluster {
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }
}

/// Reusable visited-marks for repeated cluster growth on one graph.
#[derive(Debug, Clone)]
pub struct ClusterWorkspace {
    stamp: Vec<u32>,
    epoch: u32,
}

impl ClusterWorkspace {
    pub fn new(sites: usize) -> Self {
        Self {
            stamp: vec![0; sites],
            epoch: 0,
        }
    }

    fn next_epoch(&mut self) -> u32 {
        if self.epoch == u32::MAX {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 0;
        }
        self.epoch += 1;
        self.epoch
    }
}

/// Breadth-first growth of the open cluster of `origin`. Edge states come
/// from the per-edge hash, so the result equals the component of `origin`
/// in [`sample_configuration`] with the same seed. With `allowed`, only
/// sites marked `true` may join (the origin is always included).
pub fn grow_cluster_into<G: BondGraph>(
    graph: &G,
    origin: usize,
    seed: RngSeed,
    allowed: Option<&[bool]>,
    ws: &mut ClusterWorkspace,
    out: &mut Cluster,
) {
    let epoch = ws.next_epoch();
    let key = seed.stream_key();
    out.sites.clear();
    out.sites.push(origin);
    ws.stamp[origin] = epoch;
    let mut head = 0;
    while head < out.sites.len() {
        let s = out.sites[head];
        head += 1;
        let stamp = &mut ws.stamp;
        let sites = &mut out.sites;
        graph.for_each_incident(s, |t, p, k| {
            if stamp[t] != epoch
                && allowed.is_none_or(|a| a[t])
                && edge_uniform(key, k) < p
            {
                stamp[t] = epoch;
                sites.push(t);
            }
        });
    }
    out.touched_boundary = out.sites.iter().any(|&s| graph.on_boundary(s));
}

/// Open cluster of `origin` in one sample.
pub fn grow_cluster<G: BondGraph>(graph: &G, origin: usize, seed: RngSeed) -> Result<Cluster> {
    check_site(graph, origin)?;
    let mut ws = ClusterWorkspace::new(graph.site_count());
    let mut out = Cluster::default();
    grow_cluster_into(graph, origin, seed, None, &mut ws, &mut out);
    Ok(out)
}

pub(crate) fn check_site<G: BondGraph>(graph: &G, site: usize) -> Result<()> {
    if site >= graph.site_count() {
        return Err(PercolabError::OutsideBox(format!(
            "index {site} (graph has {} sites)",
            graph.site_count()
        )));
    }
    Ok(())
}
