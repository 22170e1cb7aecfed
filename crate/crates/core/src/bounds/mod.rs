//! Decay-rate extraction and the multi-scale bound.
//!
//! The pipeline: per-shell connectivity sums give `n0` for a chosen
//! `lambda`; `lambda^(1/n0) = e^-(m + delta)` fixes the mass `m`; the tilted
//! susceptibility `chi_m` and the crossing sums `gamma_L` fix `alpha` and
//! `L0`; the iterated two-scale inequality then yields the constant `C` of
//! `tau_xy <= C e^(-m ||x0 - y0||) / (1 + ||x1 - y1||^(d+eps))`.

mod fit;
mod multiscale;
mod shells;
mod theorem;

pub use fit::{fit_decay, DecayFit, FitMode, FitWindow};
pub use multiscale::{choose_l0, default_alpha, final_constant, iterate_bound, ScaleInputs};
pub use shells::{
    chi_m_partial, default_delta, fiber_sums, find_n0, mass_from_lambda, ChiMReport, ShellTable,
};
pub use theorem::{verify_theorem_bound, TauPoint, TheoremCheck, TheoremRow};

use serde::Serialize;

use crate::error::{PercolabError, Result};
use crate::scalar::Scalar;

/// Where a certificate constant came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// Estimated from simulation data.
    Measured,
    /// A default policy value.
    Defaulted,
    /// Supplied explicitly by the caller.
    Configured,
    /// Computed from other constants.
    Derived,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Constant<T> {
    pub value: T,
    pub provenance: Provenance,
}

impl<T> Constant<T> {
    pub fn new(value: T, provenance: Provenance) -> Self {
        Self { value, provenance }
    }
}

/// The constants behind one instance of the decay bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCertificate<T> {
    pub lambda: Constant<T>,
    pub n0: Constant<u64>,
    pub delta: Constant<T>,
    pub m: Constant<T>,
    pub chi_m: Constant<T>,
    #[serde(rename = "L0")]
    pub l0: Constant<T>,
    pub alpha: Constant<T>,
    #[serde(rename = "C")]
    pub c: Constant<T>,
}

impl<T: Scalar> BoundCertificate<T> {
    /// Checks the relations the constants must satisfy for exponent `q = d + eps`.
    pub fn validate(&self, q: T) -> Result<()> {
        let fail = |msg: String| Err(PercolabError::Precondition(msg));
        let lhs = (-(self.m.value + self.delta.value)).exp();
        let rhs = self.lambda.value.powf(T::one() / T::lit(self.n0.value as f64));
        if (lhs - rhs).abs() > T::lit(1e-12) {
            return fail(format!("e^-(m+delta) = {lhs} differs from lambda^(1/n0) = {rhs}"));
        }
        let alpha_max = T::lit(2.0).powf(-q);
        if !(self.alpha.value > T::zero() && self.alpha.value < alpha_max) {
            return fail(format!("alpha {} outside (0, {alpha_max})", self.alpha.value));
        }
        let tail = T::lit(2.0) * (T::lit(2.0) * self.l0.value).powf(q);
        if self.c.value < tail {
            return fail(format!("C {} below the tail term {tail}", self.c.value));
        }
        Ok(())
    }
}
