use serde::Serialize;

use super::theorem::TauPoint;
use crate::error::{PercolabError, Result};
use crate::model::ModelParams;
use crate::scalar::Scalar;

const Q_MIN: f64 = 0.05;
const Q_MAX: f64 = 10.0;
const Q_STEP: f64 = 0.01;

/// How the long-direction exponent is treated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
#[serde(tag = "kind", content = "q", rename_all = "snake_case")]
pub enum FitMode {
    /// Fit `q` together with `m` and `c`.
    #[default]
    FreeQ,
    /// Hold `q` at the given value.
    FixedQ(f64),
}

/// Range of the data that entered the fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitWindow {
    pub points_used: usize,
    pub points_dropped: usize,
    pub short_min: u64,
    pub short_max: u64,
    pub long_min: u64,
    pub long_max: u64,
}

/// Fit of `tau ~ c e^(-m a) / (1 + b^q)` with `a = ||x0 - y0||`, `b = ||x1 - y1||`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    /// `None` when the data do not vary enough in `a`.
    pub m_hat: Option<f64>,
    /// `None` when `q` was held fixed or the data do not vary enough in `b`.
    pub q_hat: Option<f64>,
    /// Exponent used in the reported fit.
    pub q_used: f64,
    pub c_hat: f64,
    /// RMS of the residuals of `ln(mean)`.
    pub residual_rms: f64,
    pub window: FitWindow,
    pub mode: FitMode,
}

impl DecayFit {
    pub fn summary(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.6}"));
        format!(
            "m_hat = {}\nq_hat = {} (q used {:.6})\nc_hat = {:.6e}\nresidual_rms = {:.3e}\npoints = {} used, {} dropped\n||x0-y0|| in [{}, {}], ||x1-y1|| in [{}, {}]\n",
            opt(self.m_hat),
            opt(self.q_hat),
            self.q_used,
            self.c_hat,
            self.residual_rms,
            self.window.points_used,
            self.window.points_dropped,
            self.window.short_min,
            self.window.short_max,
            self.window.long_min,
            self.window.long_max,
        )
    }
}

struct Row {
    a: f64,
    b: f64,
    y: f64,
    w: f64,
}

struct Linear {
    ln_c: f64,
    m: f64,
    ssr: f64,
}

/// Weighted least squares of `y + ln(1 + b^q) = ln c - m a`.
fn solve(rows: &[Row], q: f64, fit_m: bool) -> Linear {
    let target = |r: &Row| r.y + (r.b.powf(q)).ln_1p();
    let sw: f64 = rows.iter().map(|r| r.w).sum();
    let ma = rows.iter().map(|r| r.w * r.a).sum::<f64>() / sw;
    let mt = rows.iter().map(|r| r.w * target(r)).sum::<f64>() / sw;
    let m = if fit_m {
        let sxx: f64 = rows.iter().map(|r| r.w * (r.a - ma).powi(2)).sum();
        let sxy: f64 = rows.iter().map(|r| r.w * (r.a - ma) * (target(r) - mt)).sum();
        -sxy / sxx
    } else {
        0.0
    };
    let ln_c = mt + m * ma;
    let ssr = rows
        .iter()
        .map(|r| r.w * (target(r) - ln_c + m * r.a).powi(2))
        .sum();
    Linear { ln_c, m, ssr }
}

fn distinct(values: impl Iterator<Item = u64>) -> usize {
    let mut v: Vec<u64> = values.collect();
    v.sort_unstable();
    v.dedup();
    v.len()
}

/// Fits the decay form to points with `mean > 4 stderr`, weighting `ln(mean)`
/// by its inverse delta-method variance `(mean / stderr)^2`.
///
/// `m` is fitted only with at least three distinct short distances and `q`
/// only with at least three distinct long distances; otherwise the fit
/// degrades to a long-only or short-only form and reports `None`.
pub fn fit_decay<T: Scalar>(points: &[TauPoint], p: &ModelParams<T>, mode: FitMode) -> Result<DecayFit> {
    for pt in points {
        pt.x.check_dims(p.k(), p.d())?;
        pt.y.check_dims(p.k(), p.d())?;
    }
    let usable: Vec<&TauPoint> = points
        .iter()
        .filter(|pt| pt.estimate.mean > 4.0 * pt.estimate.stderr && pt.estimate.mean > 0.0)
        .collect();
    let dropped = points.len() - usable.len();
    let fit_m = distinct(usable.iter().map(|pt| pt.short_distance())) >= 3;
    let fit_q = matches!(mode, FitMode::FreeQ) && distinct(usable.iter().map(|pt| pt.long_distance())) >= 3;
    let varies_long = distinct(usable.iter().map(|pt| pt.long_distance())) >= 3;
    if !fit_m && !varies_long {
        return Err(PercolabError::InsufficientSignal(format!(
            "{} usable points; need 3 distinct short or long distances",
            usable.len()
        )));
    }
    let params = 1 + fit_m as usize + fit_q as usize;
    if usable.len() <= params {
        return Err(PercolabError::InsufficientSignal(format!(
            "{} usable points for {params} parameters",
            usable.len()
        )));
    }

    let max_w = usable
        .iter()
        .filter(|pt| pt.estimate.stderr > 0.0)
        .map(|pt| (pt.estimate.mean / pt.estimate.stderr).powi(2))
        .fold(0.0, f64::max);
    let rows: Vec<Row> = usable
        .iter()
        .map(|pt| {
            let e = &pt.estimate;
            let w = if e.stderr > 0.0 {
                (e.mean / e.stderr).powi(2)
            } else if max_w > 0.0 {
                max_w
            } else {
                1.0
            };
            let b = pt.long_distance() as f64;
            Row {
                a: pt.short_distance() as f64,
                b,
                y: e.mean.ln(),
                w,
            }
        })
        .collect();

    let q_default = p.exponent().as_f64();
    let q = match mode {
        FitMode::FixedQ(q) => {
            if !(q > 0.0 && q.is_finite()) {
                return Err(PercolabError::Precondition(format!("fixed q must be positive, got {q}")));
            }
            q
        }
        FitMode::FreeQ if fit_q => profile_q(&rows, fit_m),
        FitMode::FreeQ => q_default,
    };
    let lin = solve(&rows, q, fit_m);
    let rms = (rows
        .iter()
        .map(|r| (r.y + r.b.powf(q).ln_1p() - lin.ln_c + lin.m * r.a).powi(2))
        .sum::<f64>()
        / rows.len() as f64)
        .sqrt();
    Ok(DecayFit {
        m_hat: fit_m.then_some(lin.m),
        q_hat: fit_q.then_some(q),
        q_used: q,
        c_hat: lin.ln_c.exp(),
        residual_rms: rms,
        window: FitWindow {
            points_used: usable.len(),
            points_dropped: dropped,
            short_min: usable.iter().map(|pt| pt.short_distance()).min().unwrap_or(0),
            short_max: usable.iter().map(|pt| pt.short_distance()).max().unwrap_or(0),
            long_min: usable.iter().map(|pt| pt.long_distance()).min().unwrap_or(0),
            long_max: usable.iter().map(|pt| pt.long_distance()).max().unwrap_or(0),
        },
        mode,
    })
}

/// Grid scan of the profiled residual over `q`, refined by golden section.
fn profile_q(rows: &[Row], fit_m: bool) -> f64 {
    let ssr = |q: f64| solve(rows, q, fit_m).ssr;
    let steps = ((Q_MAX - Q_MIN) / Q_STEP).round() as usize;
    let grid = |i: usize| Q_MIN + i as f64 * Q_STEP;
    let best = (0..=steps)
        .min_by(|&i, &j| ssr(grid(i)).total_cmp(&ssr(grid(j))))
        .unwrap_or(0);
    let (mut lo, mut hi) = (grid(best.saturating_sub(1)), grid((best + 1).min(steps)));
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (ssr(x1), ssr(x2));
    for _ in 0..200 {
        if hi - lo < 1e-13 {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = ssr(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = ssr(x2);
        }
    }
    (lo + hi) / 2.0
}
