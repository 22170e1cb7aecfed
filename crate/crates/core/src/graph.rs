//! Finite bond graphs that can be sampled: model boxes and explicit
//! weighted graphs.

use std::collections::HashSet;

use crate::error::{PercolabError, Result};
use crate::model::{LatticeBox, ModelParams, SplitPoint};
use crate::rng::{hash_coords, mix64, pair_key};
use crate::scalar::{Scalar, Weight};

/// A finite graph whose edges carry an open probability and a stable key.
pub trait BondGraph {
    fn site_count(&self) -> usize;

    /// Calls `visit(neighbor, probability, edge_key)` for each edge at `site`
    /// with positive probability. Both endpoints report the same key.
    fn for_each_incident<F: FnMut(usize, f64, u64)>(&self, site: usize, visit: F);

    /// Whether `site` lies on the truncation boundary.
    fn on_boundary(&self, _site: usize) -> bool {
        false
    }

    /// Every edge once, as `(a, b, probability, key)` with `a < b`.
    fn edge_list(&self) -> Vec<(usize, usize, f64, u64)> {
        let mut out = Vec::new();
        for a in 0..self.site_count() {
            self.for_each_incident(a, |b, p, key| {
                if a < b {
                    out.push((a, b, p, key));
                }
            });
        }
        out
    }
}

/// A model box together with its parameters, precomputed for sampling.
#[derive(Debug, Clone)]
pub struct Lattice<T> {
    bx: LatticeBox,
    params: ModelParams<T>,
    beta: f64,
    long_prob: Vec<f64>,
    site_hash: Vec<u64>,
    long_coords: Vec<i64>,
    short_coords: Vec<i64>,
    short_strides: Vec<usize>,
    boundary: Vec<bool>,
    fiber: usize,
}

impl<T: Scalar> Lattice<T> {
    pub fn new(bx: LatticeBox, params: ModelParams<T>) -> Result<Self> {
        bx.check_params(&params)?;
        let k = bx.k();
        let d = bx.d();
        let ext = bx.extents();
        let fiber = bx.fiber_size();
        let n = bx.site_count();
        let beta = params.beta().as_f64();
        let long_prob = (0..=bx.long_diameter())
            .map(|dist| {
                if dist == 0 {
                    0.0
                } else {
                    (params.beta() * params.long_coupling(dist)).as_f64()
                }
            })
            .collect();
        let mut site_hash = Vec::with_capacity(n);
        let mut boundary = Vec::with_capacity(n);
        let mut long_coords = Vec::with_capacity(fiber * d);
        let mut short_coords = Vec::with_capacity(bx.fiber_count() * k);
        for i in 0..n {
            let p = bx.point(i);
            site_hash.push(hash_coords(p.short.iter().chain(&p.long)));
            let on_edge = p
                .short
                .iter()
                .zip(bx.lo0().iter().zip(bx.hi0()))
                .chain(p.long.iter().zip(bx.lo1().iter().zip(bx.hi1())))
                .any(|(c, (lo, hi))| c == lo || c == hi);
            boundary.push(on_edge);
            if i < fiber {
                long_coords.extend_from_slice(&p.long);
            }
            if i % fiber == 0 {
                short_coords.extend_from_slice(&p.short);
            }
        }
        let short_strides = (0..k).map(|i| ext[i + 1..].iter().product()).collect();
        Ok(Self {
            bx,
            params,
            beta,
            long_prob,
            site_hash,
            long_coords,
            short_coords,
            short_strides,
            boundary,
            fiber,
        })
    }

    pub fn lattice_box(&self) -> &LatticeBox {
        &self.bx
    }

    pub fn params(&self) -> &ModelParams<T> {
        &self.params
    }

    pub fn point(&self, site: usize) -> SplitPoint {
        self.bx.point(site)
    }

    pub fn index_of(&self, p: &SplitPoint) -> Result<usize> {
        self.bx.require_index(p)
    }

    /// `||u0||` of a site, read from the precomputed table.
    pub fn short_norm(&self, site: usize) -> u64 {
        let k = self.bx.k();
        let f = site / self.fiber;
        self.short_coords[f * k..(f + 1) * k]
            .iter()
            .map(|c| c.unsigned_abs())
            .sum()
    }

    /// `||u1||` of a site.
    pub fn long_norm(&self, site: usize) -> u64 {
        let d = self.bx.d();
        let l = site % self.fiber;
        self.long_coords[l * d..(l + 1) * d]
            .iter()
            .map(|c| c.unsigned_abs())
            .sum()
    }

    /// Long distance between two sites of the box.
    pub fn long_distance(&self, a: usize, b: usize) -> u64 {
        let d = self.bx.d();
        let (la, lb) = (a % self.fiber, b % self.fiber);
        self.long_coords[la * d..(la + 1) * d]
            .iter()
            .zip(&self.long_coords[lb * d..(lb + 1) * d])
            .map(|(x, y)| x.abs_diff(*y))
            .sum()
    }

    /// Short distance between two sites of the box.
    pub fn short_distance(&self, a: usize, b: usize) -> u64 {
        let k = self.bx.k();
        let (fa, fb) = (a / self.fiber, b / self.fiber);
        self.short_coords[fa * k..(fa + 1) * k]
            .iter()
            .zip(&self.short_coords[fb * k..(fb + 1) * k])
            .map(|(x, y)| x.abs_diff(*y))
            .sum()
    }

    /// Probability of the edge between two sites of the box, as `f64`.
    pub fn probability(&self, a: usize, b: usize) -> f64 {
        if a == b {
            return 0.0;
        }
        let short = self.short_distance(a, b);
        if short == 0 {
            self.long_prob[self.long_distance(a, b) as usize]
        } else if short == 1 && self.long_distance(a, b) == 0 {
            self.beta
        } else {
            0.0
        }
    }

    pub fn fiber_size(&self) -> usize {
        self.fiber
    }

    #[inline]
    fn key(&self, a: usize, b: usize) -> u64 {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        pair_key(self.site_hash[lo], self.site_hash[hi])
    }
}

impl<T: Scalar> BondGraph for Lattice<T> {
    fn site_count(&self) -> usize {
        self.site_hash.len()
    }

    fn for_each_incident<F: FnMut(usize, f64, u64)>(&self, site: usize, mut visit: F) {
        if self.beta <= 0.0 {
            return;
        }
        let d = self.bx.d();
        let base = site - site % self.fiber;
        let local = site - base;
        let here = &self.long_coords[local * d..(local + 1) * d];
        for j in 0..self.fiber {
            if j == local {
                continue;
            }
            let there = &self.long_coords[j * d..(j + 1) * d];
            let dist: u64 = here.iter().zip(there).map(|(x, y)| x.abs_diff(*y)).sum();
            let p = self.long_prob[dist as usize];
            if p > 0.0 {
                let t = base + j;
                visit(t, p, self.key(site, t));
            }
        }
        let k = self.bx.k();
        let f = site / self.fiber;
        for (axis, &stride) in self.short_strides.iter().enumerate() {
            let c = self.short_coords[f * k + axis];
            if c > self.bx.lo0()[axis] {
                let t = site - stride;
                visit(t, self.beta, self.key(site, t));
            }
            if c < self.bx.hi0()[axis] {
                let t = site + stride;
                visit(t, self.beta, self.key(site, t));
            }
        }
    }

    fn on_boundary(&self, site: usize) -> bool {
        self.boundary[site]
    }
}

/// Simple graph with explicit edge probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph<T> {
    sites: usize,
    edges: Vec<(usize, usize, T)>,
    adjacency: Vec<Vec<(usize, usize)>>,
    points: Option<Vec<SplitPoint>>,
}

impl<T: Weight> WeightedGraph<T> {
    /// Builds the graph; endpoints are stored in canonical `(min, max)`
    /// order. Rejects loops, duplicate pairs and probabilities outside [0, 1].
    pub fn new(sites: usize, edges: Vec<(usize, usize, T)>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut canonical = Vec::with_capacity(edges.len());
        let mut adjacency = vec![Vec::new(); sites];
        for (a, b, p) in edges {
            if a >= sites || b >= sites {
                return Err(PercolabError::InvalidGraph(format!(
                    "edge ({a}, {b}) references a site outside 0..{sites}"
                )));
            }
            if a == b {
                return Err(PercolabError::InvalidGraph(format!("self-loop at {a}")));
            }
            let (a, b) = (a.min(b), a.max(b));
            if !seen.insert((a, b)) {
                return Err(PercolabError::InvalidGraph(format!("duplicate edge ({a}, {b})")));
            }
            if !(p >= T::zero() && p <= T::one()) {
                return Err(PercolabError::InvalidGraph(format!(
                    "probability {p:?} of edge ({a}, {b}) outside [0, 1]"
                )));
            }
            let idx = canonical.len();
            adjacency[a].push((b, idx));
            adjacency[b].push((a, idx));
            canonical.push((a, b, p));
        }
        Ok(Self {
            sites,
            edges: canonical,
            adjacency,
            points: None,
        })
    }

    /// Attaches lattice coordinates to the sites.
    pub fn with_points(mut self, points: Vec<SplitPoint>) -> Result<Self> {
        if points.len() != self.sites {
            return Err(PercolabError::InvalidGraph(format!(
                "{} points for {} sites",
                points.len(),
                self.sites
            )));
        }
        self.points = Some(points);
        Ok(self)
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn edges(&self) -> &[(usize, usize, T)] {
        &self.edges
    }

    pub fn points(&self) -> Option<&[SplitPoint]> {
        self.points.as_deref()
    }

    pub fn neighbors(&self, site: usize) -> impl Iterator<Item = (usize, &T)> + '_ {
        self.adjacency[site]
            .iter()
            .map(move |&(nb, e)| (nb, &self.edges[e].2))
    }

    pub fn probability(&self, a: usize, b: usize) -> Option<&T> {
        self.adjacency
            .get(a)?
            .iter()
            .find(|&&(nb, _)| nb == b)
            .map(|&(_, e)| &self.edges[e].2)
    }

    /// Same site set, keeping only edges with both endpoints in `members`.
    pub fn induced(&self, members: &[bool]) -> Self {
        let edges = self
            .edges
            .iter()
            .filter(|(a, b, _)| members[*a] && members[*b])
            .cloned()
            .collect();
        let mut g = Self::new(self.sites, edges).expect("subgraph of a valid graph");
        g.points = self.points.clone();
        g
    }

    /// Replaces one edge probability.
    pub fn with_probability(&self, edge: usize, p: T) -> Result<Self> {
        let mut edges = self.edges.clone();
        edges[edge].2 = p;
        let g = Self::new(self.sites, edges)?;
        Ok(Self {
            points: self.points.clone(),
            ..g
        })
    }

    /// Renumbers sites: new index of old site `i` is `perm[i]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        let edges = self
            .edges
            .iter()
            .map(|(a, b, p)| (perm[*a], perm[*b], p.clone()))
            .collect();
        Self::new(self.sites, edges)
    }
}

impl<T: Weight> BondGraph for WeightedGraph<T> {
    fn site_count(&self) -> usize {
        self.sites
    }

    fn for_each_incident<F: FnMut(usize, f64, u64)>(&self, site: usize, mut visit: F) {
        for &(nb, e) in &self.adjacency[site] {
            let p = self.edges[e].2.to_f64();
            if p > 0.0 {
                visit(nb, p, mix64(e as u64 ^ 0xa5a5_a5a5));
            }
        }
    }
}
