//! Experiment configuration, read from TOML with unknown keys rejected.

use std::path::{Path, PathBuf};

use percolab::graph::WeightedGraph;
use percolab::{LatticeBox, Params, SplitPoint};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub n_samples: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<Params>,
    #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
    pub lattice_box: Option<BoxSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certify: Option<CertifySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSection {
    #[serde(default)]
    pub lo0: Vec<i64>,
    #[serde(default)]
    pub hi0: Vec<i64>,
    pub lo1: Vec<i64>,
    pub hi1: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    /// Source site of the `tau` rows; the origin when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<String>,
    /// Targets of `tau_xy` rows.
    #[serde(default)]
    pub tau: Vec<String>,
    #[serde(default)]
    pub chi: bool,
    /// Tilt for `T_m` rows; each `tau` target also gets a `T_m` row.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    /// Radii `L` for rows of `sup { T_m(0, u) : ||u1|| > L }`; needs `m`.
    #[serde(default)]
    pub tm_sup: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    #[serde(default = "default_random")]
    pub random_instances: usize,
    #[serde(default = "default_model")]
    pub model_instances: usize,
    #[serde(default = "default_max_sites")]
    pub max_sites: usize,
    #[serde(default = "default_max_edges")]
    pub max_edges: usize,
    /// Instances also estimated by simulation at the top-level `n_samples`.
    #[serde(default)]
    pub mc_instances: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<usize>,
    #[serde(default)]
    pub fixtures: Vec<Fixture>,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            random_instances: default_random(),
            model_instances: default_model(),
            max_sites: default_max_sites(),
            max_edges: default_max_edges(),
            mc_instances: 0,
            cap: None,
            fixtures: Vec::new(),
        }
    }
}

fn default_random() -> usize {
    200
}
fn default_model() -> usize {
    50
}
fn default_max_sites() -> usize {
    8
}
fn default_max_edges() -> usize {
    16
}

/// Hand-written graph with an optional known answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixture {
    pub label: String,
    pub sites: usize,
    /// `[a, b, p]` triples.
    pub edges: Vec<(usize, usize, f64)>,
    pub x: usize,
    pub y: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<f64>,
}

impl Fixture {
    pub fn graph(&self) -> CliResult<WeightedGraph<f64>> {
        WeightedGraph::new(self.sites, self.edges.clone())
            .map_err(|e| CliError::Config(format!("fixture `{}`: {e}", self.label)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifySection {
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// Mass margin; half the available rate when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// `alpha`; `2^-(d+eps) / 2` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Radii of the `gamma_L` scan; powers of two up to the long box radius when empty.
    #[serde(default)]
    pub ls: Vec<f64>,
}

impl Default for CertifySection {
    fn default() -> Self {
        Self {
            lambda: default_lambda(),
            delta: None,
            alpha: None,
            ls: Vec::new(),
        }
    }
}

fn default_lambda() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    /// CSV produced by `simulate`; its `tau` rows are fitted instead of sampling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    /// Explicit targets measured from the origin.
    #[serde(default)]
    pub targets: Vec<String>,
    /// Inclusive range along the first short axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub short_range: Option<[i64; 2]>,
    /// Inclusive range along the first long axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub long_range: Option<[i64; 2]>,
    /// Hold the long exponent at this value instead of fitting it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_q: Option<f64>,
}

impl Config {
    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.n_samples == 0 {
            return Err(CliError::Config("`n_samples` must be at least 1".into()));
        }
        if let Some(b) = &self.lattice_box {
            let bx = b.build()?;
            if let Some(p) = &self.model {
                bx.check_params(p).map_err(|e| CliError::Config(format!("`box`: {e}")))?;
            }
        }
        if let Some(o) = &self.oracle {
            for f in &o.fixtures {
                let g = f.graph()?;
                if f.x >= g.sites() || f.y >= g.sites() {
                    return Err(CliError::Config(format!("fixture `{}`: x or y out of range", f.label)));
                }
            }
            if o.max_sites < 2 {
                return Err(CliError::Config("`oracle.max_sites` must be at least 2".into()));
            }
        }
        if let Some(c) = &self.certify {
            if !(c.lambda > 0.0 && c.lambda < 1.0) {
                return Err(CliError::Config(format!("`certify.lambda` must lie in (0, 1), got {}", c.lambda)));
            }
            if c.ls.iter().any(|l| !(*l > 0.0)) {
                return Err(CliError::Config("`certify.ls` entries must be positive".into()));
            }
        }
        if let Some(s) = &self.simulate {
            if !s.tm_sup.is_empty() && s.m.is_none() {
                return Err(CliError::Config("`simulate.tm_sup` needs `simulate.m`".into()));
            }
            if s.m.is_some_and(|m| !(m >= 0.0)) {
                return Err(CliError::Config("`simulate.m` must be >= 0".into()));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> CliResult<Params> {
        self.model
            .ok_or_else(|| CliError::Config("missing required key `model`".into()))
    }

    pub fn lattice_box(&self) -> CliResult<LatticeBox> {
        self.lattice_box
            .as_ref()
            .ok_or_else(|| CliError::Config("missing required key `box`".into()))?
            .build()
    }
}

impl BoxSection {
    pub fn build(&self) -> CliResult<LatticeBox> {
        LatticeBox::new(self.lo0.clone(), self.hi0.clone(), self.lo1.clone(), self.hi1.clone())
            .map_err(|e| CliError::Config(format!("`box`: {e}")))
    }
}

/// Parses a site string and checks it against the model dimensions.
pub fn parse_site(s: &str, p: &Params, key: &str) -> CliResult<SplitPoint> {
    let site: SplitPoint = s
        .parse()
        .map_err(|e| CliError::Config(format!("`{key}`: {e}")))?;
    site.check_dims(p.k(), p.d())
        .map_err(|e| CliError::Config(format!("`{key}`: {e}")))?;
    Ok(site)
}
