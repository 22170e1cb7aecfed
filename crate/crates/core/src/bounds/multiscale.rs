use serde::Serialize;

use crate::error::{PercolabError, Result};
use crate::sampler::Estimate;
use crate::scalar::Scalar;

/// Inputs of the two-scale iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaleInputs<T> {
    pub alpha: T,
    pub l0: T,
    pub d: usize,
    pub epsilon: T,
    pub beta: T,
    pub chi_m: T,
}

impl<T: Scalar> ScaleInputs<T> {
    /// `q = d + eps`.
    pub fn exponent(&self) -> T {
        T::lit(self.d as f64) + self.epsilon
    }

    /// Growth factor `alpha 2^q` of the geometric series; below 1 when admissible.
    pub fn ratio(&self) -> T {
        self.alpha * T::lit(2.0).powf(self.exponent())
    }

    /// Prefactor `A = 2^q 2 beta chi_m^2` of the volume term.
    pub fn prefactor(&self) -> T {
        T::lit(2.0).powf(self.exponent()) * T::lit(2.0) * self.beta * self.chi_m * self.chi_m
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(PercolabError::Precondition(msg));
        if self.d == 0 {
            return bad("d must be at least 1".into());
        }
        if !(self.epsilon > T::zero() && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        let alpha_max = T::lit(2.0).powf(-self.exponent());
        if !(self.alpha > T::zero() && self.alpha < alpha_max) {
            return bad(format!("alpha {} outside (0, {alpha_max})", self.alpha));
        }
        if !(self.l0 > T::zero() && self.l0.is_finite()) {
            return bad(format!("L0 must be positive, got {}", self.l0));
        }
        if !(self.beta >= T::zero() && self.beta.is_finite()) {
            return bad(format!("beta must be nonnegative, got {}", self.beta));
        }
        if !(self.chi_m >= T::zero() && self.chi_m.is_finite()) {
            return bad(format!("chi_m must be nonnegative, got {}", self.chi_m));
        }
        Ok(())
    }
}

/// Number of halvings `n`: the smallest integer with `L / 2^n <= L0`.
fn halvings<T: Scalar>(l: T, l0: T) -> u32 {
    let mut n = 0;
    let mut scale = l;
    while scale > l0 {
        scale = scale / T::lit(2.0);
        n += 1;
    }
    n
}

/// Bound on the tilted sup at scale `L` after iterating the two-scale
/// inequality down to `L0`:
/// `A sum_{j<n} (alpha 2^q)^j / (1 + L^q) + alpha^n`.
pub fn iterate_bound<T: Scalar>(inputs: &ScaleInputs<T>, l: T) -> Result<T> {
    inputs.validate()?;
    if !(l > T::zero()) || !l.is_finite() {
        return Err(PercolabError::Precondition(format!("L must be positive, got {l}")));
    }
    if l <= inputs.l0 {
        return Ok(T::one());
    }
    let n = halvings(l, inputs.l0);
    let r = inputs.ratio();
    let mut series = T::zero();
    let mut term = T::one();
    for _ in 0..n {
        series = series + term;
        term = term * r;
    }
    let q = inputs.exponent();
    Ok(inputs.prefactor() * series / (T::one() + l.powf(q)) + inputs.alpha.powi(n as i32))
}

/// `C = A / (1 - alpha 2^q) + 2 (2 L0)^q`.
pub fn final_constant<T: Scalar>(inputs: &ScaleInputs<T>) -> Result<T> {
    inputs.validate()?;
    let q = inputs.exponent();
    let tail = T::lit(2.0) * (T::lit(2.0) * inputs.l0).powf(q);
    Ok(inputs.prefactor() / (T::one() - inputs.ratio()) + tail)
}

/// `alpha = 2^-q / 2`, the midpoint of the admissible interval.
pub fn default_alpha<T: Scalar>(d: usize, epsilon: T) -> T {
    T::lit(2.0).powf(-(T::lit(d as f64) + epsilon)) / T::lit(2.0)
}

/// Smallest tabulated `L` such that `gamma_L' + 2 stderr < alpha` for every
/// tabulated `L' >= L`.
pub fn choose_l0(table: &[(f64, Estimate)], alpha: f64) -> Result<f64> {
    let mut rows: Vec<&(f64, Estimate)> = table.iter().collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = None;
    for (l, e) in rows.iter().rev() {
        if e.upper(2.0) < alpha {
            best = Some(*l);
        } else {
            break;
        }
    }
    match best {
        Some(l) if l > 0.0 => Ok(l),
        _ => Err(PercolabError::NoQualifyingL0 { alpha }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn inputs(alpha: f64, l0: f64, d: usize, epsilon: f64, beta: f64, chi_m: f64) -> ScaleInputs<f64> {
        ScaleInputs { alpha, l0, d, epsilon, beta, chi_m }
    }

    #[test]
    fn constant_examples() {
        let c = final_constant(&inputs(0.1, 4.0, 1, 1.0, 0.1, 2.0)).unwrap();
        assert!((c - (16.0 / 3.0 + 128.0)).abs() < 1e-12);
        let c = final_constant(&inputs(0.1, 4.0, 1, 1.0, 0.0, 1.0)).unwrap();
        assert_eq!(c, 128.0);
        let mut prev = 0.0;
        for gap in [1e-1, 1e-3, 1e-6, 1e-9] {
            let c = final_constant(&inputs(0.25 - gap, 1.0, 1, 1.0, 0.1, 1.0)).unwrap();
            assert!(c > prev);
            prev = c;
        }
        assert!(prev > 1e8);
        assert!(final_constant(&inputs(0.25, 1.0, 1, 1.0, 0.1, 1.0)).is_err());
        let c32 = final_constant(&ScaleInputs { alpha: 0.1f32, l0: 4.0, d: 1, epsilon: 1.0, beta: 0.1, chi_m: 2.0 }).unwrap();
        assert!((c32 as f64 - (16.0 / 3.0 + 128.0)).abs() < 1e-4);
    }

    #[test]
    fn iterate_examples() {
        let s = inputs(0.1, 4.0, 1, 1.0, 0.1, 2.0);
        assert_eq!(iterate_bound(&s, 4.0).unwrap(), 1.0);
        assert_eq!(iterate_bound(&s, 0.5).unwrap(), 1.0);
        // one halving: A / (1 + L^2) + alpha
        let b = iterate_bound(&s, 8.0).unwrap();
        assert!((b - (3.2 / 65.0 + 0.1)).abs() < 1e-15);
        // two halvings: A (1 + 0.4) / (1 + L^2) + alpha^2
        let b = iterate_bound(&s, 9.0).unwrap();
        assert!((b - (3.2 * 1.4 / 82.0 + 0.01)).abs() < 1e-15);
        let zero = inputs(0.1, 4.0, 1, 1.0, 0.0, 1.0);
        assert!((iterate_bound(&zero, 4.0 * 1024.0).unwrap() - 0.1f64.powi(10)).abs() < 1e-20);
        assert!(iterate_bound(&s, -1.0).is_err());
    }

    #[test]
    fn limit_stays_under_constant() {
        let s = inputs(0.2, 2.0, 1, 1.0, 0.3, 3.0);
        let c = final_constant(&s).unwrap();
        for e in 1..40 {
            let l = 2.0f64.powi(e) * 1.37;
            let b = iterate_bound(&s, l).unwrap();
            assert!(b * (1.0 + l * l) <= c * (1.0 + 1e-12));
        }
    }

    #[test]
    fn alpha_and_l0() {
        assert_eq!(default_alpha(1, 1.0f64), 0.125);
        let e = |v: f64| Estimate::certain(v, 10);
        let table = vec![(1.0, e(0.5)), (2.0, e(0.1)), (4.0, e(0.2)), (8.0, e(0.05)), (16.0, e(0.0))];
        assert_eq!(choose_l0(&table, 0.15).unwrap(), 8.0);
        assert_eq!(choose_l0(&table, 0.25).unwrap(), 2.0);
        assert_eq!(choose_l0(&table, 0.6).unwrap(), 1.0);
        assert!(choose_l0(&[(1.0, e(0.3))], 0.1).is_err());
        assert!(choose_l0(&[], 0.1).is_err());
    }

    fn admissible() -> impl Strategy<Value = ScaleInputs<f64>> {
        (1usize..=3, 0.05f64..2.0, 0.01f64..0.99, 1.0f64..50.0, 0.0f64..1.0, 1.0f64..20.0).prop_map(
            |(d, epsilon, frac, l0, beta, chi_m)| {
                let alpha = frac * 2f64.powf(-(d as f64 + epsilon));
                inputs(alpha, l0, d, epsilon, beta, chi_m)
            },
        )
    }

    proptest! {
        #[test]
        fn constant_dominates(s in admissible()) {
            let c = final_constant(&s).unwrap();
            let q = s.exponent();
            for i in 0..200 {
                let l = s.l0 * (1.0 + 1e-6) * (1e6f64 / (1.0 + 1e-6)).powf(i as f64 / 199.0);
                let v = iterate_bound(&s, l).unwrap() * (1.0 + l.powf(q));
                prop_assert!(v <= c * (1.0 + 1e-9), "L={l} v={v} C={c}");
            }
        }

        #[test]
        fn nonincreasing_past_two_l0(s in admissible()) {
            // the volume term can grow across a halving unless A <= (1 - alpha) L0^q
            let q = s.exponent();
            prop_assume!(s.prefactor() <= (1.0 - s.alpha) * s.l0.powf(q));
            let mut prev = f64::INFINITY;
            for i in 0..300 {
                let l = 2.0 * s.l0 * (1.0 + 1e-9) * 1.05f64.powi(i);
                let b = iterate_bound(&s, l).unwrap();
                prop_assert!(b <= prev * (1.0 + 1e-12));
                prev = b;
            }
        }
    }
}
