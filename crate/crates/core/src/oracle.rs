//! Exact connectivity probabilities on small graphs.
//!
//! [`Oracle::exact_tau`] sums over all `2^|E|` bond configurations by a
//! depth-first walk that carries the partial product of edge weights and a
//! union-find with rollback. Subtrees of weight zero are skipped and, for
//! single-pair queries, a subtree whose endpoints are already joined is
//! credited its whole weight at once; both shortcuts are exact.
//!
//! [`deletion_contraction_tau`] is an independent second route used to
//! cross-check the enumerator.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{PercolabError, Result};
use crate::graph::WeightedGraph;
use crate::model::{enumerate_edge_indices, LatticeBox, ModelParams};
use crate::scalar::{Scalar, Weight};
use crate::union_find::RollbackUnionFind;

/// Default limit on the number of enumerated edges (2^24 configurations).
pub const DEFAULT_CAP: usize = 24;

/// Leading edges fixed per parallel block.
const SPLIT_EDGES: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Oracle {
    cap: usize,
}

impl Default for Oracle {
    fn default() -> Self {
        Self { cap: DEFAULT_CAP }
    }
}

/// Both sides of the HSL inequality for one instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HslReport<T> {
    /// `tau_xy`
    pub lhs: T,
    /// `sum over u in S, v not in S of tau^S_xu p_uv tau_vy`
    pub rhs: T,
    pub slack: T,
    pub holds: bool,
}

/// Exact connectivity against the best single-path product.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FkgReport<T> {
    pub tau: T,
    pub best_path_bound: T,
    pub direct: Option<T>,
    pub holds: bool,
}

impl Oracle {
    pub fn new(cap: usize) -> Self {
        Self { cap }
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    fn check_cap(&self, edges: usize) -> Result<()> {
        if edges > self.cap {
            return Err(PercolabError::CapExceeded {
                edges,
                cap: self.cap,
            });
        }
        Ok(())
    }

    /// Exact `tau_xy`.
    pub fn exact_tau<T: Weight>(&self, g: &WeightedGraph<T>, x: usize, y: usize) -> Result<T> {
        check_sites(g, &[x, y])?;
        self.check_cap(g.edges().len())?;
        if x == y {
            return Ok(T::one());
        }
        Ok(enumerate(
            g,
            T::zero,
            |acc: &mut T, w: &T, _uf| *acc = acc.clone() + w.clone(),
            |a, b| *a = a.clone() + b,
            Some((x, y)),
        ))
    }

    /// Exact connectivity from each source to every site: `rows[i][s] =
    /// tau(sources[i], s)`, from a single enumeration.
    pub fn connectivity_rows<T: Weight>(
        &self,
        g: &WeightedGraph<T>,
        sources: &[usize],
    ) -> Result<Vec<Vec<T>>> {
        check_sites(g, sources)?;
        self.check_cap(g.edges().len())?;
        let n = g.sites();
        let k = sources.len();
        Ok(enumerate(
            g,
            || vec![vec![T::zero(); n]; k],
            |rows: &mut Vec<Vec<T>>, w: &T, uf: &RollbackUnionFind| {
                let roots: Vec<usize> = (0..n).map(|s| uf.find(s)).collect();
                for (row, &src) in rows.iter_mut().zip(sources) {
                    let r = roots[src];
                    for (slot, &root) in row.iter_mut().zip(&roots) {
                        if root == r {
                            *slot = slot.clone() + w.clone();
                        }
                    }
                }
            },
            |a, b| {
                for (ra, rb) in a.iter_mut().zip(b) {
                    for (x, y) in ra.iter_mut().zip(rb) {
                        *x = x.clone() + y;
                    }
                }
            },
            None,
        ))
    }

    /// Exact `tau^S_xy`: connection inside the subgraph induced by `S`.
    pub fn exact_tau_restricted<T: Weight>(
        &self,
        g: &WeightedGraph<T>,
        x: usize,
        y: usize,
        members: &[bool],
    ) -> Result<T> {
        check_members(g, members)?;
        check_sites(g, &[x, y])?;
        if !members[x] {
            return Err(PercolabError::Precondition("x must belong to S".into()));
        }
        if !members[y] {
            return Ok(T::zero());
        }
        self.exact_tau(&g.induced(members), x, y)
    }

    /// Evaluates `tau_xy <= sum_{u in S, v in S^c} tau^S_xu p_uv tau_vy`.
    pub fn check_hsl<T: Weight>(
        &self,
        g: &WeightedGraph<T>,
        x: usize,
        y: usize,
        members: &[bool],
    ) -> Result<HslReport<T>> {
        check_members(g, members)?;
        check_sites(g, &[x, y])?;
        if !members[x] || members[y] {
            return Err(PercolabError::Precondition(
                "HSL needs x in S and y outside S".into(),
            ));
        }
        let full = self.connectivity_rows(g, &[x, y])?;
        let inside = self.connectivity_rows(&g.induced(members), &[x])?;
        let (from_x, to_y) = (&full[0], &full[1]);
        let mut rhs = T::zero();
        for (a, b, p) in g.edges() {
            let (u, v) = match (members[*a], members[*b]) {
                (true, false) => (*a, *b),
                (false, true) => (*b, *a),
                _ => continue,
            };
            rhs = rhs + inside[0][u].clone() * p.clone() * to_y[v].clone();
        }
        let lhs = from_x[y].clone();
        let slack = rhs.clone() - lhs.clone();
        let holds = slack >= T::zero() - T::slack_tolerance();
        Ok(HslReport {
            lhs,
            rhs,
            slack,
            holds,
        })
    }

    /// Checks `tau_xy >= max over paths of the product of edge
    /// probabilities`, which in particular covers `tau_xy >= p_xy`.
    pub fn check_fkg_lower<T: Weight>(
        &self,
        g: &WeightedGraph<T>,
        x: usize,
        y: usize,
    ) -> Result<FkgReport<T>> {
        let tau = self.exact_tau(g, x, y)?;
        let best = best_path_product(g, x, y);
        let holds = tau.clone() - best.clone() >= T::zero() - T::slack_tolerance();
        Ok(FkgReport {
            tau,
            best_path_bound: best,
            direct: g.probability(x, y).cloned(),
            holds,
        })
    }

    /// The model's candidate edges in a box as an explicit graph, with the
    /// box coordinates attached.
    pub fn model_subgraph<T: Scalar + Weight>(
        &self,
        bx: &LatticeBox,
        p: &ModelParams<T>,
    ) -> Result<WeightedGraph<T>> {
        let mut edges = enumerate_edge_indices(bx, p)?;
        if p.beta() <= T::zero() {
            // keep the bond structure with zero weights
            let positive = ModelParams::new(p.k(), p.d(), p.epsilon(), T::one())?;
            edges = enumerate_edge_indices(bx, &positive)?
                .into_iter()
                .map(|(a, b, _)| (a, b, T::zero()))
                .collect();
        }
        self.check_cap(edges.len())?;
        WeightedGraph::new(bx.site_count(), edges)?.with_points(bx.points().collect())
    }
}

/// Exact `tau_xy` by deletion-contraction:
/// `tau(G) = p_e tau(G / e) + (1 - p_e) tau(G - e)`.
pub fn deletion_contraction_tau<T: Weight>(g: &WeightedGraph<T>, x: usize, y: usize) -> Result<T> {
    check_sites(g, &[x, y])?;
    let edges: Vec<(usize, usize, T)> = g.edges().to_vec();
    Ok(contract(edges, x, y))
}

fn contract<T: Weight>(mut edges: Vec<(usize, usize, T)>, x: usize, y: usize) -> T {
    if x == y {
        return T::one();
    }
    let Some((a, b, p)) = edges.pop() else {
        return T::zero();
    };
    let deleted = contract(edges.clone(), x, y);
    // merge b into a; loops disappear, parallel edges stay
    let relabel = |s: usize| if s == b { a } else { s };
    let merged: Vec<_> = edges
        .into_iter()
        .map(|(u, v, q)| (relabel(u), relabel(v), q))
        .filter(|(u, v, _)| u != v)
        .collect();
    let contracted = contract(merged, relabel(x), relabel(y));
    p.clone() * contracted + (T::one() - p) * deleted
}

fn best_path_product<T: Weight>(g: &WeightedGraph<T>, x: usize, y: usize) -> T {
    // max-product Dijkstra; valid because every factor lies in [0, 1]
    let n = g.sites();
    let mut best = vec![T::zero(); n];
    let mut done = vec![false; n];
    best[x] = T::one();
    loop {
        let mut pick: Option<usize> = None;
        for s in 0..n {
            if !done[s] && pick.is_none_or(|p| best[s] > best[p]) {
                pick = Some(s);
            }
        }
        let Some(u) = pick else { break };
        if best[u].is_zero() {
            break;
        }
        done[u] = true;
        if u == y {
            break;
        }
        for (v, p) in g.neighbors(u) {
            let cand = best[u].clone() * p.clone();
            if !done[v] && cand > best[v] {
                best[v] = cand;
            }
        }
    }
    best[y].clone()
}

fn check_sites<T: Weight>(g: &WeightedGraph<T>, sites: &[usize]) -> Result<()> {
    for &s in sites {
        if s >= g.sites() {
            return Err(PercolabError::Precondition(format!(
                "site {s} outside graph of {} sites",
                g.sites()
            )));
        }
    }
    Ok(())
}

fn check_members<T: Weight>(g: &WeightedGraph<T>, members: &[bool]) -> Result<()> {
    if members.len() != g.sites() {
        return Err(PercolabError::Precondition(format!(
            "membership mask has {} entries for {} sites",
            members.len(),
            g.sites()
        )));
    }
    Ok(())
}

/// Enumerates all configurations, splitting on the leading edges into
/// blocks that run in parallel and are merged in block order.
fn enumerate<T, A, I, L, M>(
    g: &WeightedGraph<T>,
    init: I,
    leaf: L,
    merge: M,
    pair: Option<(usize, usize)>,
) -> A
where
    T: Weight,
    A: Send,
    I: Fn() -> A + Sync,
    L: Fn(&mut A, &T, &RollbackUnionFind) + Sync,
    M: Fn(&mut A, A),
{
    let edges = g.edges();
    let split = edges.len().min(SPLIT_EDGES);
    let blocks: Vec<A> = (0..1usize << split)
        .into_par_iter()
        .map(|mask| {
            let mut acc = init();
            let mut uf = RollbackUnionFind::new(g.sites());
            let mut w = T::one();
            for (i, (a, b, p)) in edges[..split].iter().enumerate() {
                if mask >> i & 1 == 1 {
                    w = w * p.clone();
                    uf.union(*a, *b);
                } else {
                    w = w * (T::one() - p.clone());
                }
            }
            let mut walker = Walker {
                edges,
                leaf: &leaf,
                pair,
            };
            walker.descend(split, w, &mut uf, &mut acc);
            acc
        })
        .collect();
    let mut iter = blocks.into_iter();
    let mut acc = iter.next().expect("at least one block");
    for b in iter {
        merge(&mut acc, b);
    }
    acc
}

struct Walker<'a, T, L> {
    edges: &'a [(usize, usize, T)],
    leaf: &'a L,
    pair: Option<(usize, usize)>,
}

impl<T: Weight, L> Walker<'_, T, L> {
    fn descend<A>(&mut self, idx: usize, weight: T, uf: &mut RollbackUnionFind, acc: &mut A)
    where
        L: Fn(&mut A, &T, &RollbackUnionFind),
    {
        if weight.is_zero() {
            return;
        }
        if let Some((x, y)) = self.pair {
            if uf.find(x) == uf.find(y) {
                // every completion keeps x and y joined; their weights sum to `weight`
                (self.leaf)(acc, &weight, uf);
                return;
            }
        }
        if idx == self.edges.len() {
            if self.pair.is_none() {
                (self.leaf)(acc, &weight, uf);
            }
            return;
        }
        let (a, b, p) = &self.edges[idx];
        uf.union(*a, *b);
        self.descend(idx + 1, weight.clone() * p.clone(), uf, acc);
        uf.rollback();
        self.descend(idx + 1, weight * (T::one() - p.clone()), uf, acc);
    }
}

/// Shape of the random graphs used by the randomized suites.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomGraphSpec {
    pub min_sites: usize,
    pub max_sites: usize,
    pub max_edges: usize,
    /// Edge probabilities are drawn uniformly from `[min_prob, 1]`.
    pub min_prob: f64,
}

impl Default for RandomGraphSpec {
    fn default() -> Self {
        Self {
            min_sites: 2,
            max_sites: 8,
            max_edges: 16,
            min_prob: 0.01,
        }
    }
}

/// One admissible `(g, x, y, S)` instance.
#[derive(Debug, Clone)]
pub struct Instance {
    pub label: String,
    pub graph: WeightedGraph<f64>,
    pub x: usize,
    pub y: usize,
    /// `S`: contains `x`, excludes `y`.
    pub members: Vec<bool>,
}

/// Erdős–Rényi style graph with at most `max_edges` edges.
pub fn random_graph<R: Rng>(rng: &mut R, spec: &RandomGraphSpec) -> WeightedGraph<f64> {
    let n = rng.random_range(spec.min_sites..=spec.max_sites);
    let density: f64 = rng.random_range(0.2..0.8);
    let mut pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .filter(|_| rng.random_bool(density))
        .collect();
    pairs.shuffle(rng);
    pairs.truncate(spec.max_edges);
    let edges = pairs
        .into_iter()
        .map(|(a, b)| (a, b, rng.random_range(spec.min_prob..=1.0)))
        .collect();
    WeightedGraph::new(n, edges).expect("generated graph is simple")
}

fn random_split<R: Rng>(rng: &mut R, n: usize) -> (usize, usize, Vec<bool>) {
    let x = rng.random_range(0..n);
    let mut y = rng.random_range(0..n - 1);
    if y >= x {
        y += 1;
    }
    let members = (0..n)
        .map(|s| s == x || (s != y && rng.random_bool(0.5)))
        .collect();
    (x, y, members)
}

/// Random graph with random distinct `x`, `y` and a random `S`.
pub fn random_instance<R: Rng>(rng: &mut R, spec: &RandomGraphSpec, label: String) -> Instance {
    let graph = random_graph(rng, &spec.clone_with_min_sites(2));
    let (x, y, members) = random_split(rng, graph.sites());
    Instance {
        label,
        graph,
        x,
        y,
        members,
    }
}

impl RandomGraphSpec {
    fn clone_with_min_sites(&self, min: usize) -> Self {
        Self {
            min_sites: self.min_sites.max(min),
            ..*self
        }
    }
}

/// Small model boxes whose edge count stays within 16.
fn model_box_shapes() -> Vec<(usize, usize, LatticeBox)> {
    let b = |lo0: Vec<i64>, hi0: Vec<i64>, lo1: Vec<i64>, hi1: Vec<i64>| {
        LatticeBox::new(lo0, hi0, lo1, hi1).expect("valid box")
    };
    vec![
        (0, 1, b(vec![], vec![], vec![0], vec![3])),
        (0, 1, b(vec![], vec![], vec![0], vec![4])),
        (0, 1, b(vec![], vec![], vec![-2], vec![3])),
        (1, 1, b(vec![0], vec![1], vec![0], vec![2])),
        (1, 1, b(vec![0], vec![1], vec![0], vec![3])),
        (1, 1, b(vec![0], vec![2], vec![0], vec![1])),
        (1, 2, b(vec![0], vec![1], vec![0, 0], vec![1, 1])),
        (1, 2, b(vec![0], vec![0], vec![0, 0], vec![1, 2])),
    ]
}

/// Model box with `(k, d)` in `{(0,1), (1,1), (1,2)}`, `beta` in `{0.1,
/// 0.3}`, `eps` in `{0.5, 1}`, and a random admissible `(x, y, S)`.
pub fn random_model_instance<R: Rng>(rng: &mut R, oracle: &Oracle, label: String) -> Result<Instance> {
    let shapes = model_box_shapes();
    let (k, d, bx) = shapes[rng.random_range(0..shapes.len())].clone();
    let beta = [0.1, 0.3][rng.random_range(0..2)];
    let eps = [0.5, 1.0][rng.random_range(0..2)];
    let params = ModelParams::new(k, d, eps, beta)?;
    let graph = oracle.model_subgraph(&bx, &params)?;
    let (x, y, members) = random_split(rng, graph.sites());
    Ok(Instance {
        label: format!("{label} k={k} d={d} beta={beta} eps={eps} sites={}", graph.sites()),
        graph,
        x,
        y,
        members,
    })
}
