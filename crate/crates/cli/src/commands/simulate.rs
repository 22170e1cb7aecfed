use std::collections::BTreeMap;

use percolab::rng::derive_seed;
use percolab::sampler::{estimate_chi, estimate_tau_row};
use percolab::{Lattice, Runner, SplitPoint};
use serde::Serialize;

use crate::config::{parse_site, Config};
use crate::error::{CliError, CliResult};

/// One CSV row. Column order is part of the output format.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimRow {
    pub quantity: String,
    pub k: usize,
    pub d: usize,
    pub epsilon: f64,
    pub beta: f64,
    pub x: String,
    pub y: String,
    #[serde(rename = "L")]
    pub l: String,
    pub m: String,
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: u64,
    pub seed: u64,
    pub argmax: String,
}

fn core_err(e: percolab::PercolabError) -> CliError {
    CliError::Config(e.to_string())
}

/// Runs the `simulate` section and returns its rows in a fixed order.
pub fn simulate_rows(cfg: &Config, runner: &Runner) -> CliResult<Vec<SimRow>> {
    let p = cfg.params()?;
    let bx = cfg.lattice_box()?;
    let lattice = Lattice::new(bx, p).map_err(core_err)?;
    let sec = cfg.simulate.clone().unwrap_or_default();
    let origin = SplitPoint::origin(p.k(), p.d());
    let from = match &sec.from {
        Some(s) => parse_site(s, &p, "simulate.from")?,
        None => origin.clone(),
    };
    let targets = sec
        .tau
        .iter()
        .map(|s| parse_site(s, &p, "simulate.tau"))
        .collect::<CliResult<Vec<_>>>()?;
    let row = |quantity: &str, x: &SplitPoint, y: &str, l: Option<f64>, m: Option<f64>| SimRow {
        quantity: quantity.into(),
        k: p.k(),
        d: p.d(),
        epsilon: p.epsilon(),
        beta: p.beta(),
        x: x.to_string(),
        y: y.into(),
        l: l.map(|v| v.to_string()).unwrap_or_default(),
        m: m.map(|v| v.to_string()).unwrap_or_default(),
        mean: 0.0,
        stderr: 0.0,
        n_samples: cfg.n_samples,
        seed: 0,
        argmax: String::new(),
    };

    let mut rows = Vec::new();
    // one row estimator per distinct source
    let mut sources: BTreeMap<SplitPoint, u64> = BTreeMap::new();
    if !targets.is_empty() {
        sources.insert(from.clone(), derive_seed(cfg.seed, &format!("simulate/row/{from}")));
    }
    if !sec.tm_sup.is_empty() {
        sources.insert(origin.clone(), derive_seed(cfg.seed, &format!("simulate/row/{origin}")));
    }
    let mut tau_rows = BTreeMap::new();
    for (src, seed) in &sources {
        let idx = lattice.index_of(src).map_err(core_err)?;
        tau_rows.insert(src.clone(), (estimate_tau_row(&lattice, idx, cfg.n_samples, *seed, runner).map_err(core_err)?, *seed));
    }
    if let Some((tr, seed)) = tau_rows.get(&from) {
        for y in &targets {
            let yi = lattice.index_of(y).map_err(core_err)?;
            let mut r = row("tau", &from, &y.to_string(), None, None);
            let e = tr.estimate(yi);
            (r.mean, r.stderr, r.seed) = (e.mean, e.stderr, *seed);
            rows.push(r);
            if let Some(m) = sec.m {
                let mut r = row("T_m", &from, &y.to_string(), None, Some(m));
                let e = e.scaled((m * from.short_distance(y) as f64).exp());
                (r.mean, r.stderr, r.seed) = (e.mean, e.stderr, *seed);
                rows.push(r);
            }
        }
    }
    if let (Some((tr, seed)), Some(m)) = (tau_rows.get(&origin), sec.m) {
        for &l in &sec.tm_sup {
            let sup = match tr.tilted_sup(&lattice, l, m) {
                Ok(s) => s,
                Err(e) => return Err(CliError::Config(format!("`simulate.tm_sup` {l}: {e}"))),
            };
            let mut r = row("T_m_sup", &origin, "", Some(l), Some(m));
            (r.mean, r.stderr, r.seed) = (sup.estimate.mean, sup.estimate.stderr, *seed);
            r.argmax = sup.argmax.to_string();
            rows.push(r);
        }
    }
    if sec.chi {
        let seed = derive_seed(cfg.seed, &format!("simulate/chi/{from}"));
        let idx = lattice.index_of(&from).map_err(core_err)?;
        let chi = estimate_chi(&lattice, idx, cfg.n_samples, seed, runner).map_err(core_err)?;
        let mut r = row("chi", &from, "", None, None);
        (r.mean, r.stderr, r.seed) = (chi.size.mean, chi.size.stderr, seed);
        rows.push(r);
        let mut r = row("chi_boundary_fraction", &from, "", None, None);
        (r.mean, r.seed) = (chi.boundary_fraction, seed);
        rows.push(r);
    }
    Ok(rows)
}
