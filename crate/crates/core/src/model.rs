//! Lattice geometry of Z^(k+d), the coupling J_uv and bond probabilities.
//!
//! A site `u = (u0, u1)` has a short component `u0` in Z^k and a long
//! component `u1` in Z^d. Long-range bonds live inside a fiber (fixed `u0`)
//! and decay like `||u1 - v1||^-(d+eps)`; short bonds join nearest neighbours
//! of the short component with the long component held fixed.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{PercolabError, Result};
use crate::scalar::Scalar;

/// L1 norm of an integer vector.
pub fn l1_norm(x: &[i64]) -> u64 {
    x.iter().map(|c| c.unsigned_abs()).sum()
}

/// L1 distance between two integer vectors of equal length.
pub fn l1_distance(a: &[i64], b: &[i64]) -> u64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.abs_diff(*y)).sum()
}

/// Number of points of Z^dim at L1 distance exactly `n` from the origin.
pub fn l1_sphere_size(dim: usize, n: u64) -> u128 {
    l1_sphere_sizes(dim, n)[n as usize]
}

/// Sphere sizes of Z^dim for every radius `0..=n_max`, by dynamic
/// programming over the axes: adding an axis with coordinate `c` moves
/// `2 * count(j - |c|)` points (one for `c = 0`) into shell `j`.
pub fn l1_sphere_sizes(dim: usize, n_max: u64) -> Vec<u128> {
    let len = n_max as usize + 1;
    let mut counts = vec![0u128; len];
    counts[0] = 1;
    for _ in 0..dim {
        let mut next = vec![0u128; len];
        let mut prefix = 0u128; // sum of counts[0..j]
        for j in 0..len {
            next[j] = counts[j] + 2 * prefix;
            prefix += counts[j];
        }
        counts = next;
    }
    counts
}

/// A lattice site split into its short (`Z^k`) and long (`Z^d`) components.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SplitPoint {
    pub short: Vec<i64>,
    pub long: Vec<i64>,
}

impl SplitPoint {
    pub fn new(short: Vec<i64>, long: Vec<i64>) -> Self {
        Self { short, long }
    }

    pub fn origin(k: usize, d: usize) -> Self {
        Self::new(vec![0; k], vec![0; d])
    }

    pub fn k(&self) -> usize {
        self.short.len()
    }

    pub fn d(&self) -> usize {
        self.long.len()
    }

    pub fn check_dims(&self, k: usize, d: usize) -> Result<()> {
        if self.k() != k || self.d() != d {
            return Err(PercolabError::DimensionMismatch {
                k,
                d,
                got_k: self.k(),
                got_d: self.d(),
            });
        }
        Ok(())
    }

    /// `||u0 - v0||`
    pub fn short_distance(&self, other: &Self) -> u64 {
        l1_distance(&self.short, &other.short)
    }

    /// `||u1 - v1||`
    pub fn long_distance(&self, other: &Self) -> u64 {
        l1_distance(&self.long, &other.long)
    }

    pub fn translate(&self, t: &SplitPoint) -> SplitPoint {
        SplitPoint {
            short: self.short.iter().zip(&t.short).map(|(a, b)| a + b).collect(),
            long: self.long.iter().zip(&t.long).map(|(a, b)| a + b).collect(),
        }
    }
}

/// Formats as `s1;s2|l1;l2`; the short part is empty when `k = 0`.
impl fmt::Display for SplitPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[i64]| {
            v.iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(";")
        };
        write!(f, "{}|{}", join(&self.short), join(&self.long))
    }
}

impl FromStr for SplitPoint {
    type Err = PercolabError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || PercolabError::Precondition(format!("malformed site `{s}`, expected `s;..|l;..`"));
        let (short, long) = s.split_once('|').ok_or_else(bad)?;
        let parse = |part: &str| -> Result<Vec<i64>> {
            let part = part.trim();
            if part.is_empty() {
                return Ok(Vec::new());
            }
            part.split(';')
                .map(|c| c.trim().parse::<i64>().map_err(|_| bad()))
                .collect()
        };
        Ok(SplitPoint::new(parse(short)?, parse(long)?))
    }
}

impl Serialize for ModelParams<f32> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawModelParams::from(*self).serialize(s)
    }
}

impl Serialize for ModelParams<f64> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawModelParams::from(*self).serialize(s)
    }
}

impl<'de, T: Scalar + Deserialize<'de>> Deserialize<'de> for ModelParams<T> {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let raw = RawModelParams::<T>::deserialize(de)?;
        ModelParams::new(raw.k, raw.d, raw.epsilon, raw.beta).map_err(serde::de::Error::custom)
    }
}

/// Flat `{k, d, epsilon, beta}` record.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModelParams<T> {
    k: usize,
    d: usize,
    epsilon: T,
    beta: T,
}

impl<T: Scalar> From<ModelParams<T>> for RawModelParams<T> {
    fn from(p: ModelParams<T>) -> Self {
        Self {
            k: p.k,
            d: p.d,
            epsilon: p.epsilon,
            beta: p.beta,
        }
    }
}

/// `(k, d, eps, beta)`; validated on construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams<T> {
    k: usize,
    d: usize,
    epsilon: T,
    beta: T,
}

impl<T: Scalar> ModelParams<T> {
    pub fn new(k: usize, d: usize, epsilon: T, beta: T) -> Result<Self> {
        if d == 0 {
            return Err(PercolabError::InvalidParams("d must be at least 1".into()));
        }
        if !(epsilon > T::zero()) || !epsilon.is_finite() {
            return Err(PercolabError::InvalidParams(format!(
                "epsilon must be positive and finite, got {epsilon}"
            )));
        }
        if !(beta >= T::zero() && beta <= T::one()) {
            return Err(PercolabError::InvalidParams(format!(
                "beta must lie in [0, 1], got {beta}"
            )));
        }
        Ok(Self { k, d, epsilon, beta })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    /// Decay exponent `d + eps` of the long-range coupling.
    pub fn exponent(&self) -> T {
        T::lit(self.d as f64) + self.epsilon
    }

    pub fn with_beta(&self, beta: T) -> Result<Self> {
        Self::new(self.k, self.d, self.epsilon, beta)
    }

    /// Long-range coupling `2 / (1 + n^(d+eps))` at long distance `n >= 1`.
    pub fn long_coupling(&self, n: u64) -> T {
        let two = T::lit(2.0);
        two / (T::one() + T::lit(n as f64).powf(self.exponent()))
    }
}

/// `J_uv`.
pub fn coupling<T: Scalar>(u: &SplitPoint, v: &SplitPoint, p: &ModelParams<T>) -> Result<T> {
    u.check_dims(p.k, p.d)?;
    v.check_dims(p.k, p.d)?;
    let short = u.short_distance(v);
    let long = u.long_distance(v);
    Ok(if short == 0 && long > 0 {
        p.long_coupling(long)
    } else if long == 0 && short == 1 {
        T::one()
    } else {
        T::zero()
    })
}

/// `p_uv = beta * J_uv`.
pub fn bond_probability<T: Scalar>(
    u: &SplitPoint,
    v: &SplitPoint,
    p: &ModelParams<T>,
) -> Result<T> {
    Ok(p.beta * coupling(u, v, p)?)
}

/// Closed coordinate box with free boundary; short axes first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeBox {
    lo0: Vec<i64>,
    hi0: Vec<i64>,
    lo1: Vec<i64>,
    hi1: Vec<i64>,
}

impl LatticeBox {
    pub fn new(lo0: Vec<i64>, hi0: Vec<i64>, lo1: Vec<i64>, hi1: Vec<i64>) -> Result<Self> {
        if lo0.len() != hi0.len() || lo1.len() != hi1.len() {
            return Err(PercolabError::InvalidBox(
                "lower and upper corners differ in length".into(),
            ));
        }
        if lo1.is_empty() {
            return Err(PercolabError::InvalidBox("at least one long axis required".into()));
        }
        for (lo, hi) in lo0.iter().zip(&hi0).chain(lo1.iter().zip(&hi1)) {
            if lo > hi {
                return Err(PercolabError::InvalidBox(format!("lo {lo} > hi {hi}")));
            }
        }
        Ok(Self { lo0, hi0, lo1, hi1 })
    }

    /// Box `[-r, r]` on every axis, with separate radii per axis.
    pub fn centered(short_radius: &[i64], long_radius: &[i64]) -> Result<Self> {
        Self::new(
            short_radius.iter().map(|r| -r).collect(),
            short_radius.to_vec(),
            long_radius.iter().map(|r| -r).collect(),
            long_radius.to_vec(),
        )
    }

    pub fn single_site(p: &SplitPoint) -> Self {
        Self {
            lo0: p.short.clone(),
            hi0: p.short.clone(),
            lo1: p.long.clone(),
            hi1: p.long.clone(),
        }
    }

    pub fn k(&self) -> usize {
        self.lo0.len()
    }

    pub fn d(&self) -> usize {
        self.lo1.len()
    }

    pub fn lo0(&self) -> &[i64] {
        &self.lo0
    }
    pub fn hi0(&self) -> &[i64] {
        &self.hi0
    }
    pub fn lo1(&self) -> &[i64] {
        &self.lo1
    }
    pub fn hi1(&self) -> &[i64] {
        &self.hi1
    }

    pub fn check_params<T: Scalar>(&self, p: &ModelParams<T>) -> Result<()> {
        if self.k() != p.k() || self.d() != p.d() {
            return Err(PercolabError::DimensionMismatch {
                k: p.k(),
                d: p.d(),
                got_k: self.k(),
                got_d: self.d(),
            });
        }
        Ok(())
    }

    /// Side lengths, short axes first.
    pub fn extents(&self) -> Vec<usize> {
        self.lo0
            .iter()
            .zip(&self.hi0)
            .chain(self.lo1.iter().zip(&self.hi1))
            .map(|(lo, hi)| (hi - lo + 1) as usize)
            .collect()
    }

    pub fn site_count(&self) -> usize {
        self.extents().iter().product()
    }

    /// Number of sites sharing one short coordinate.
    pub fn fiber_size(&self) -> usize {
        self.extents()[self.k()..].iter().product()
    }

    pub fn fiber_count(&self) -> usize {
        self.extents()[..self.k()].iter().product()
    }

    pub fn contains(&self, p: &SplitPoint) -> bool {
        p.k() == self.k()
            && p.d() == self.d()
            && p.short
                .iter()
                .zip(self.lo0.iter().zip(&self.hi0))
                .all(|(c, (lo, hi))| lo <= c && c <= hi)
            && p.long
                .iter()
                .zip(self.lo1.iter().zip(&self.hi1))
                .all(|(c, (lo, hi))| lo <= c && c <= hi)
    }

    /// Mixed-radix index with the first short axis most significant, so
    /// index order is lexicographic coordinate order in every box.
    pub fn index_of(&self, p: &SplitPoint) -> Option<usize> {
        if !self.contains(p) {
            return None;
        }
        let mut idx = 0usize;
        let lows = self.lo0.iter().chain(&self.lo1);
        let highs = self.hi0.iter().chain(&self.hi1);
        for ((c, lo), hi) in p.short.iter().chain(&p.long).zip(lows).zip(highs) {
            idx = idx * ((hi - lo + 1) as usize) + (c - lo) as usize;
        }
        Some(idx)
    }

    pub fn require_index(&self, p: &SplitPoint) -> Result<usize> {
        self.index_of(p)
            .ok_or_else(|| PercolabError::OutsideBox(p.to_string()))
    }

    /// Coordinates of the site with the given index.
    pub fn point(&self, mut idx: usize) -> SplitPoint {
        let k = self.k();
        let ext = self.extents();
        let mut coords = vec![0i64; ext.len()];
        for axis in (0..ext.len()).rev() {
            let r = idx % ext[axis];
            idx /= ext[axis];
            let lo = if axis < k { self.lo0[axis] } else { self.lo1[axis - k] };
            coords[axis] = lo + r as i64;
        }
        let long = coords.split_off(k);
        SplitPoint::new(coords, long)
    }

    pub fn points(&self) -> impl Iterator<Item = SplitPoint> + '_ {
        (0..self.site_count()).map(|i| self.point(i))
    }

    /// Largest L1 distance between two long components in the box.
    pub fn long_diameter(&self) -> u64 {
        l1_distance(&self.lo1, &self.hi1)
    }

    /// Largest short-shell index `||u0||` attained in the box.
    pub fn max_short_norm(&self) -> u64 {
        self.lo0
            .iter()
            .zip(&self.hi0)
            .map(|(lo, hi)| lo.unsigned_abs().max(hi.unsigned_abs()))
            .sum()
    }

    /// Largest `||u1||` attained in the box.
    pub fn max_long_norm(&self) -> u64 {
        self.lo1
            .iter()
            .zip(&self.hi1)
            .map(|(lo, hi)| lo.unsigned_abs().max(hi.unsigned_abs()))
            .sum()
    }
}

/// Unordered candidate bond with its probability; `u < v` lexicographically.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge<T> {
    pub u: SplitPoint,
    pub v: SplitPoint,
    pub probability: T,
}

/// All unordered pairs in the box with positive bond probability, sorted by
/// endpoint index.
pub fn enumerate_edges<T: Scalar>(bx: &LatticeBox, p: &ModelParams<T>) -> Result<Vec<Edge<T>>> {
    Ok(enumerate_edge_indices(bx, p)?
        .into_iter()
        .map(|(a, b, probability)| Edge {
            u: bx.point(a),
            v: bx.point(b),
            probability,
        })
        .collect())
}

/// Same as [`enumerate_edges`] but in site-index form.
pub fn enumerate_edge_indices<T: Scalar>(
    bx: &LatticeBox,
    p: &ModelParams<T>,
) -> Result<Vec<(usize, usize, T)>> {
    bx.check_params(p)?;
    let mut out = Vec::new();
    if p.beta() <= T::zero() {
        return Ok(out);
    }
    let n = bx.site_count();
    let fiber = bx.fiber_size();
    let ext = bx.extents();
    let k = bx.k();
    // stride of short axis i in index space
    let strides: Vec<usize> = (0..k).map(|i| ext[i + 1..].iter().product()).collect();
    for a in 0..n {
        let pa = bx.point(a);
        let fiber_end = (a / fiber + 1) * fiber;
        for b in a + 1..fiber_end {
            let pb = bx.point(b);
            let prob = p.beta() * p.long_coupling(pa.long_distance(&pb));
            if prob > T::zero() {
                out.push((a, b, prob));
            }
        }
        for (axis, &stride) in strides.iter().enumerate() {
            if pa.short[axis] < bx.hi0()[axis] {
                out.push((a, a + stride, p.beta()));
            }
        }
    }
    out.sort_by_key(|&(a, b, _)| (a, b));
    Ok(out)
}
