use std::path::Path;

use percolab::bounds::{fit_decay, DecayFit, FitMode, TauPoint};
use percolab::rng::derive_seed;
use percolab::sampler::estimate_tau_row;
use percolab::{Estimate, Lattice, Params, Runner, SplitPoint};
use serde::Deserialize;

use crate::config::{parse_site, Config, FitSection};
use crate::error::{CliError, CliResult};

/// Subset of the `simulate` CSV read back by `fit`.
#[derive(Debug, Deserialize)]
struct CsvRow {
    quantity: String,
    x: String,
    y: String,
    mean: f64,
    stderr: f64,
    n_samples: u64,
}

fn read_table(path: &Path, p: &Params) -> CliResult<Vec<TauPoint>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for row in r.deserialize::<CsvRow>() {
        let row = row.map_err(|e| CliError::io(path, e))?;
        if row.quantity != "tau" {
            continue;
        }
        out.push(TauPoint::new(
            parse_site(&row.x, p, "fit.input")?,
            parse_site(&row.y, p, "fit.input")?,
            Estimate { mean: row.mean, stderr: row.stderr, n_samples: row.n_samples },
        ));
    }
    Ok(out)
}

fn targets(sec: &FitSection, p: &Params) -> CliResult<Vec<SplitPoint>> {
    let mut out = sec
        .targets
        .iter()
        .map(|s| parse_site(s, p, "fit.targets"))
        .collect::<CliResult<Vec<_>>>()?;
    if sec.short_range.is_some() && p.k() == 0 {
        return Err(CliError::Config("`fit.short_range` needs k >= 1".into()));
    }
    if sec.short_range.is_some() || sec.long_range.is_some() {
        let [s_lo, s_hi] = sec.short_range.unwrap_or([0, 0]);
        let [l_lo, l_hi] = sec.long_range.unwrap_or([0, 0]);
        for s in s_lo..=s_hi {
            for l in l_lo..=l_hi {
                let mut pt = SplitPoint::origin(p.k(), p.d());
                if p.k() > 0 {
                    pt.short[0] = s;
                }
                pt.long[0] = l;
                out.push(pt);
            }
        }
    }
    Ok(out)
}

/// The `tau` table to fit: read from `fit.input`, or sampled from the origin.
pub fn fit_table(cfg: &Config, runner: &Runner) -> CliResult<Vec<TauPoint>> {
    let p = cfg.params()?;
    let sec = cfg.fit.clone().unwrap_or_default();
    if let Some(path) = &sec.input {
        return read_table(path, &p);
    }
    let pts = targets(&sec, &p)?;
    if pts.is_empty() {
        return Ok(Vec::new());
    }
    let lattice = Lattice::new(cfg.lattice_box()?, p).map_err(|e| CliError::Config(e.to_string()))?;
    let origin = SplitPoint::origin(p.k(), p.d());
    let idx = lattice.index_of(&origin).map_err(|e| CliError::Config(e.to_string()))?;
    let seed = derive_seed(cfg.seed, "fit/row");
    let row = estimate_tau_row(&lattice, idx, cfg.n_samples, seed, runner)
        .map_err(|e| CliError::Config(e.to_string()))?;
    pts.into_iter()
        .map(|y| {
            let yi = lattice.index_of(&y).map_err(|e| CliError::Config(format!("`fit`: {e}")))?;
            Ok(TauPoint::new(origin.clone(), y, row.estimate(yi)))
        })
        .collect()
}

pub fn fit(cfg: &Config, runner: &Runner) -> CliResult<(Vec<TauPoint>, DecayFit)> {
    let p = cfg.params()?;
    let table = fit_table(cfg, runner)?;
    let mode = match cfg.fit.as_ref().and_then(|f| f.fixed_q) {
        Some(q) => FitMode::FixedQ(q),
        None => FitMode::FreeQ,
    };
    let fit = fit_decay(&table, &p, mode).map_err(|e| CliError::Failed(e.to_string()))?;
    Ok((table, fit))
}
