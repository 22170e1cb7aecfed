use percolab::bounds::{
    chi_m_partial, choose_l0, default_alpha, default_delta, final_constant, find_n0, fiber_sums,
    iterate_bound, mass_from_lambda, verify_theorem_bound, BoundCertificate, ChiMReport, Constant,
    Provenance, ScaleInputs, ShellTable, TauPoint, TheoremCheck,
};
use percolab::rng::derive_seed;
use percolab::sampler::{estimate_gamma, estimate_tau_row};
use percolab::{Certificate, Estimate, Lattice, Runner, SplitPoint};
use serde::Serialize;

use crate::config::Config;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaRow {
    #[serde(rename = "L")]
    pub l: f64,
    pub gamma: Estimate,
}

/// Everything `certify` computed, in pipeline order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertifyReport {
    pub certificate: Certificate,
    pub shells: ShellTable,
    pub chi_m: ChiMReport,
    pub gamma: Vec<GammaRow>,
    pub check: CheckSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckSummary {
    pub passed: usize,
    pub total: usize,
    pub worst_slack: f64,
}

/// One row of the verification table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationRow {
    pub x: String,
    pub y: String,
    pub short_distance: u64,
    pub long_distance: u64,
    pub mean: f64,
    pub stderr: f64,
    pub lower: f64,
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
    /// `iterate_bound` at the default binding `L = ||x1 - y1|| / 4`.
    pub iterate_bound: f64,
    /// `e^(m ||x0 - y0||) (mean - 2 stderr)`.
    pub tilted_lower: f64,
}

pub struct Certified {
    pub report: CertifyReport,
    pub rows: Vec<VerificationRow>,
    pub check: TheoremCheck,
}

fn default_ls(lattice: &Lattice<f64>) -> Vec<f64> {
    let radius = lattice.lattice_box().max_long_norm().max(1);
    let mut ls = Vec::new();
    let mut l = 1u64;
    while l <= radius {
        ls.push(l as f64);
        l *= 2;
    }
    ls
}

/// The full pipeline; a failing stage is reported by name.
pub fn certify(cfg: &Config, runner: &Runner) -> CliResult<Certified> {
    let p = cfg.params()?;
    let bx = cfg.lattice_box()?;
    let lattice = Lattice::new(bx, p).map_err(|e| CliError::Config(e.to_string()))?;
    let sec = cfg.certify.clone().unwrap_or_default();
    let origin = SplitPoint::origin(p.k(), p.d());
    let origin_idx = lattice.index_of(&origin).map_err(|e| CliError::Config(e.to_string()))?;
    let n = cfg.n_samples;
    let q = p.exponent();
    let seed = |label: &str| derive_seed(cfg.seed, &format!("certify/{label}"));

    let shells = fiber_sums(&lattice, n, seed("fiber_sums"), runner).map_err(|e| CliError::stage("fiber_sums", e))?;
    let n0 = find_n0(&shells, sec.lambda).map_err(|e| CliError::stage("find_n0", e))?;
    let (delta, delta_prov) = match sec.delta {
        Some(d) => (d, Provenance::Configured),
        None => (default_delta(sec.lambda, n0), Provenance::Defaulted),
    };
    let m = mass_from_lambda(sec.lambda, n0, delta).map_err(|e| CliError::stage("mass_from_lambda", e))?;
    let chi = chi_m_partial(&lattice, m, sec.lambda, n0, n, seed("chi_m_partial"), runner)
        .map_err(|e| CliError::stage("chi_m_partial", e))?;
    // upper confidence value of the truncated sum plus the analytic tail
    let chi_m = chi.partial.upper(2.0) + chi.tail;

    let ls = if sec.ls.is_empty() { default_ls(&lattice) } else { sec.ls.clone() };
    let gamma = estimate_gamma(&lattice, origin_idx, &ls, m, n, seed("gamma_scan"), runner)
        .map_err(|e| CliError::stage("gamma_scan", e))?;
    let table: Vec<(f64, Estimate)> = ls.iter().copied().zip(gamma.iter().copied()).collect();
    let (alpha, alpha_prov) = match sec.alpha {
        Some(a) => (a, Provenance::Configured),
        None => (default_alpha(p.d(), p.epsilon()), Provenance::Defaulted),
    };
    let l0 = choose_l0(&table, alpha).map_err(|e| CliError::stage("choose_l0", e))?;
    let inputs = ScaleInputs { alpha, l0, d: p.d(), epsilon: p.epsilon(), beta: p.beta(), chi_m };
    let c = final_constant(&inputs).map_err(|e| CliError::stage("final_constant", e))?;

    let certificate = BoundCertificate {
        lambda: Constant::new(sec.lambda, Provenance::Configured),
        n0: Constant::new(n0, Provenance::Measured),
        delta: Constant::new(delta, delta_prov),
        m: Constant::new(m, Provenance::Derived),
        chi_m: Constant::new(chi_m, Provenance::Measured),
        l0: Constant::new(l0, Provenance::Measured),
        alpha: Constant::new(alpha, alpha_prov),
        c: Constant::new(c, Provenance::Derived),
    };
    certificate.validate(q).map_err(|e| CliError::stage("certificate", e))?;

    let row = estimate_tau_row(&lattice, origin_idx, n, seed("verify"), runner)
        .map_err(|e| CliError::stage("verify_theorem_bound", e))?;
    let points: Vec<TauPoint> = (0..lattice.lattice_box().site_count())
        .map(|s| TauPoint::new(origin.clone(), lattice.point(s), row.estimate(s)))
        .collect();
    let check = verify_theorem_bound(&points, c, m, &p).map_err(|e| CliError::stage("verify_theorem_bound", e))?;
    let mut rows = Vec::with_capacity(points.len());
    for (pt, r) in points.iter().zip(&check.rows) {
        let b = pt.long_distance() as f64;
        let a = pt.short_distance() as f64;
        rows.push(VerificationRow {
            x: r.x.clone(),
            y: r.y.clone(),
            short_distance: pt.short_distance(),
            long_distance: pt.long_distance(),
            mean: r.mean,
            stderr: r.stderr,
            lower: r.lower,
            bound: r.bound,
            slack: r.slack,
            pass: r.pass,
            iterate_bound: iterate_bound(&inputs, (b / 4.0).max(f64::MIN_POSITIVE))
                .map_err(|e| CliError::stage("iterate_bound", e))?,
            tilted_lower: (m * a).exp() * r.lower,
        });
    }
    Ok(Certified {
        report: CertifyReport {
            certificate,
            shells,
            chi_m: chi,
            gamma: table.into_iter().map(|(l, gamma)| GammaRow { l, gamma }).collect(),
            check: CheckSummary { passed: check.passed, total: check.total, worst_slack: check.worst_slack },
        },
        rows,
        check,
    })
}
