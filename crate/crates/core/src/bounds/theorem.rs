use serde::Serialize;

use crate::error::{PercolabError, Result};
use crate::model::{ModelParams, SplitPoint};
use crate::sampler::Estimate;
use crate::scalar::Scalar;

/// A measured connectivity `tau_xy`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauPoint {
    pub x: SplitPoint,
    pub y: SplitPoint,
    pub estimate: Estimate,
}

impl TauPoint {
    pub fn new(x: SplitPoint, y: SplitPoint, estimate: Estimate) -> Self {
        Self { x, y, estimate }
    }

    pub fn short_distance(&self) -> u64 {
        self.x.short_distance(&self.y)
    }

    pub fn long_distance(&self) -> u64 {
        self.x.long_distance(&self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremRow {
    pub x: String,
    pub y: String,
    pub mean: f64,
    pub stderr: f64,
    /// `mean - 2 stderr`.
    pub lower: f64,
    pub bound: f64,
    /// `bound - lower`; negative on a violation.
    pub slack: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremCheck {
    pub passed: usize,
    pub total: usize,
    pub worst_slack: f64,
    pub rows: Vec<TheoremRow>,
}

impl TheoremCheck {
    pub fn all_pass(&self) -> bool {
        self.passed == self.total
    }

    pub fn violations(&self) -> impl Iterator<Item = &TheoremRow> {
        self.rows.iter().filter(|r| !r.pass)
    }
}

/// Checks `mean - 2 stderr <= C e^(-m ||x0 - y0||) / (1 + ||x1 - y1||^(d+eps))`
/// at every point.
pub fn verify_theorem_bound<T: Scalar>(
    points: &[TauPoint],
    c: f64,
    m: f64,
    p: &ModelParams<T>,
) -> Result<TheoremCheck> {
    if !(c >= 0.0 && c.is_finite()) || !(m >= 0.0 && m.is_finite()) {
        return Err(PercolabError::Precondition(format!("need finite C >= 0 and m >= 0, got C={c}, m={m}")));
    }
    let q = p.exponent().as_f64();
    let mut rows = Vec::with_capacity(points.len());
    for pt in points {
        pt.x.check_dims(p.k(), p.d())?;
        pt.y.check_dims(p.k(), p.d())?;
        let a = pt.short_distance() as f64;
        let b = pt.long_distance() as f64;
        let bound = c * (-m * a).exp() / (1.0 + b.powf(q));
        let lower = pt.estimate.lower(2.0);
        rows.push(TheoremRow {
            x: pt.x.to_string(),
            y: pt.y.to_string(),
            mean: pt.estimate.mean,
            stderr: pt.estimate.stderr,
            lower,
            bound,
            slack: bound - lower,
            pass: lower <= bound,
        });
    }
    Ok(TheoremCheck {
        passed: rows.iter().filter(|r| r.pass).count(),
        total: rows.len(),
        worst_slack: rows.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(s: i64, l: i64, mean: f64, stderr: f64) -> TauPoint {
        TauPoint::new(
            SplitPoint::origin(1, 1),
            SplitPoint::new(vec![s], vec![l]),
            Estimate { mean, stderr, n_samples: 100 },
        )
    }

    #[test]
    fn examples() {
        let p = ModelParams::new(1, 1, 1.0, 0.1).unwrap();
        let pts = vec![pt(1, 0, 0.2, 0.01), pt(0, 3, 0.05, 0.01), pt(2, 2, 0.0, 0.0)];
        let zero = verify_theorem_bound(&pts, 0.0, 1.0, &p).unwrap();
        assert_eq!(zero.passed, 1);
        assert_eq!(zero.violations().count(), 2);
        let ok = verify_theorem_bound(&pts, 10.0, 0.5, &p).unwrap();
        assert!(ok.all_pass());
        // bound at (1, 0): 10 e^-0.5
        assert!((ok.rows[0].bound - 10.0 * (-0.5f64).exp()).abs() < 1e-12);
        assert!((ok.rows[1].bound - 1.0).abs() < 1e-12);
        assert!(verify_theorem_bound(&pts, -1.0, 0.5, &p).is_err());
        let bad = vec![TauPoint::new(SplitPoint::origin(0, 1), SplitPoint::origin(0, 1), Estimate::certain(1.0, 1))];
        assert!(verify_theorem_bound(&bad, 1.0, 1.0, &p).is_err());
    }

    #[test]
    fn stderr_allowance() {
        let p = ModelParams::new(1, 1, 1.0, 0.1).unwrap();
        // bound 0.1, lower = 0.12 - 2 * 0.015 = 0.09
        let r = verify_theorem_bound(&[pt(0, 3, 0.12, 0.015)], 1.0, 1.0, &p).unwrap();
        assert!(r.all_pass());
        assert!((r.worst_slack - 0.01).abs() < 1e-12);
    }
}
