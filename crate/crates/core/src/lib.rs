//! Mixed short/long-range bond percolation on Z^(k+d).
//!
//! Sites split as `u = (u0, u1)` with a short component in Z^k and a long
//! component in Z^d. Bonds inside a fiber (fixed `u0`) are open with
//! probability `2 beta / (1 + ||u1 - v1||^(d+eps))`; nearest-neighbour bonds
//! in the short directions are open with probability `beta`.
//!
//! - [`model`]: geometry, couplings, boxes and edge enumeration.
//! - [`sampler`]: reproducible Monte Carlo estimation by cluster growth.
//! - [`oracle`]: exact connectivities on small graphs, HSL and FKG checks.
//! - [`bounds`]: the multi-scale decay bound, its constants, fits and checks.
//!
//! The model and the bound machinery are generic over [`Scalar`] (`f32` /
//! `f64`); the exact oracle runs on any [`Weight`], including rationals.

// `!(x > 0)` style checks are kept on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod graph;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod sampler;
pub mod scalar;
pub mod union_find;

pub use error::{PercolabError, Result};
pub use graph::{BondGraph, Lattice, WeightedGraph};
pub use model::{LatticeBox, ModelParams, SplitPoint};
pub use rng::RngSeed;
pub use sampler::{Estimate, Runner};
pub use scalar::{Scalar, Weight};

/// Double-precision model parameters.
pub type Params = ModelParams<f64>;
/// Single-precision model parameters.
pub type Params32 = ModelParams<f32>;
/// Double-precision model box ready for sampling.
pub type Lattice64 = Lattice<f64>;
/// Explicit graph with double-precision probabilities.
pub type Graph = WeightedGraph<f64>;
/// Explicit graph with exact rational probabilities.
pub type ExactGraph = WeightedGraph<num_rational::BigRational>;
/// Double-precision bound certificate.
pub type Certificate = bounds::BoundCertificate<f64>;
