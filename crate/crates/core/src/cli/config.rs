use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::ScalarExpr;
use crate::gallery::{build_family, named_example, Example, MuParams};
use crate::geometry::{Chart, GridSpec, MetricField, SymTensorField};
use crate::brinkmann::system::MIN_NODES_PER_AXIS;
use crate::tolerances::Tolerances;

/// Per-axis samples for sources that do not come with their own grid.
pub const DEFAULT_GRID: usize = 7;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
    Both,
}

impl Format {
    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }

    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
}

/// Contents of a run configuration file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub source: SourceConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeConfig>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub characteristics: Option<CharacteristicsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate: Option<CandidateConfig>,
}

/// Exactly one of: `example`; `lambda` + `mu`; `metric` + `tensor`.
/// The last two need `domain` and take `coords` (default `t, x, y`) and
/// `periodic` (default all false). Component keys name two coordinates,
/// e.g. `"t,t"`; missing components are zero.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periodic: Option<Vec<bool>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tensor: Option<BTreeMap<String, String>>,
}

/// At most one of `n` (same count on every axis) and `counts`; `detect`
/// overrides the counts used for warped-product detection.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detect: Option<Vec<usize>>,
    #[serde(default)]
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub point: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

/// `mu` for the characteristics check: an explicit expression, a form
/// index with parameters and `g` (in the variable `s`), or the source's
/// own `mu`. Without `coefficients` every `(a, b, c)` in `{-1, 0, 1}^3`
/// except the origin is tried.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharacteristicsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub form: Option<u8>,
    #[serde(default)]
    pub params: MuParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<[f64; 3]>,
}

/// A closed-form solution of `Hess f = a g` to verify.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateConfig {
    pub f: String,
    pub a: String,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.tolerances.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// The metric/tensor pair named by `[source]`.
    pub fn resolve(&self) -> Result<Example> {
        let s = &self.source;
        let family = s.lambda.is_some() || s.mu.is_some();
        let raw = s.metric.is_some() || s.tensor.is_some();
        let chosen = [s.example.is_some(), family, raw].iter().filter(|b| **b).count();
        if chosen != 1 {
            return Err(Error::Config(
                "[source] needs exactly one of `example`, `lambda` + `mu`, or `metric` + `tensor`".into(),
            ));
        }
        if let Some(id) = &s.example {
            if s.coords.is_some() || s.domain.is_some() || s.periodic.is_some() {
                return Err(Error::Config("[source] `example` takes no chart keys".into()));
            }
            return named_example(id);
        }
        let chart = self.chart()?;
        let n = chart.dim();
        let center: Vec<f64> = chart.domain().iter().map(|[a, b]| 0.5 * (a + b)).collect();
        let (g, a, fam, summary) = if family {
            let (Some(lambda), Some(mu)) = (s.lambda, &s.mu) else {
                return Err(Error::Config("[source] `lambda` and `mu` go together".into()));
            };
            let fam = build_family(lambda, &ScalarExpr::parse(mu, chart.coord_names())?, &chart)?;
            (fam.g.clone(), fam.a.clone(), Some(fam), "two-eigenvalue family from config")
        } else {
            let (Some(gm), Some(am)) = (&s.metric, &s.tensor) else {
                return Err(Error::Config("[source] `metric` and `tensor` go together".into()));
            };
            let gc = components(&chart, gm, "metric")?;
            let ac = components(&chart, am, "tensor")?;
            let g = MetricField::parse(&chart, &borrow(&gc))?;
            let a = SymTensorField::parse(&chart, &borrow(&ac))?;
            (g, a, None, "metric and tensor from config")
        };
        Ok(Example {
            id: "config".into(),
            summary,
            g,
            a,
            family: fam,
            grid: GridSpec::uniform(n, DEFAULT_GRID),
            detect_grid: GridSpec::uniform(n, DEFAULT_GRID),
            probe: center,
        })
    }

    fn chart(&self) -> Result<Chart> {
        let s = &self.source;
        let Some(domain) = &s.domain else {
            return Err(Error::Config("[source] `domain` is required".into()));
        };
        let coords = s
            .coords
            .clone()
            .unwrap_or_else(|| ["t", "x", "y"].iter().map(|c| c.to_string()).collect());
        let periodic = s.periodic.clone().unwrap_or_else(|| vec![false; coords.len()]);
        Chart::new(&coords, domain, &periodic)
    }

    /// Grid for `example`, honoring `[grid]`; `detect` selects the
    /// example's detection default.
    pub fn grid_spec(&self, example: &Example, detect: bool) -> Result<GridSpec> {
        let n = example.chart().dim();
        let default = if detect { &example.detect_grid } else { &example.grid };
        let spec = match &self.grid {
            None => default.clone(),
            Some(gc) => {
                let counts = match (gc.n, &gc.counts) {
                    (Some(_), Some(_)) => {
                        return Err(Error::Config("[grid] takes `n` or `counts`, not both".into()))
                    }
                    _ if detect && gc.detect.is_some() => gc.detect.clone().unwrap_or_default(),
                    (Some(k), None) => vec![k; n],
                    (None, Some(c)) => c.clone(),
                    (None, None) => default.counts.clone(),
                };
                GridSpec { counts, margin: gc.margin }
            }
        };
        if spec.counts.len() != n {
            return Err(Error::Config(format!("[grid] has {} counts for a {n}-dimensional chart", spec.counts.len())));
        }
        if let Some(c) = spec.counts.iter().find(|c| **c < MIN_NODES_PER_AXIS) {
            return Err(Error::Config(format!("[grid] count {c} is below {MIN_NODES_PER_AXIS}")));
        }
        Ok(spec)
    }

    pub fn probe_point(&self, example: &Example) -> Result<Vec<f64>> {
        let p = self.probe.as_ref().map_or_else(|| example.probe.clone(), |p| p.point.clone());
        if p.len() != example.chart().dim() {
            return Err(Error::Config(format!("[probe] point has {} coordinates", p.len())));
        }
        Ok(p)
    }

    /// A self-contained configuration reproducing `example`, its grids
    /// and probe.
    pub fn export(example: &Example, base: &RunConfig) -> Self {
        let chart = example.chart();
        let names = chart.coord_names();
        let mut source = SourceConfig {
            coords: Some(names.to_vec()),
            domain: Some(chart.domain().to_vec()),
            periodic: Some(chart.periodic().to_vec()),
            ..Default::default()
        };
        if let Some(f) = &example.family {
            source.lambda = Some(f.lambda);
            source.mu = Some(f.mu.to_string());
        } else {
            let dump = |entry: &dyn Fn(usize, usize) -> String| {
                let mut out = BTreeMap::new();
                for i in 0..names.len() {
                    for j in i..names.len() {
                        let e = entry(i, j);
                        if e != "0" {
                            out.insert(format!("{},{}", names[i], names[j]), e);
                        }
                    }
                }
                out
            };
            source.metric = Some(dump(&|i, j| example.g.field().entry(i, j).to_string()));
            source.tensor = Some(dump(&|i, j| example.a.field().entry(i, j).to_string()));
        }
        let grid = base.grid.clone().or_else(|| {
            Some(GridConfig {
                n: None,
                counts: Some(example.grid.counts.clone()),
                detect: Some(example.detect_grid.counts.clone()),
                margin: example.grid.margin,
            })
        });
        RunConfig {
            seed: base.seed,
            source,
            grid,
            tolerances: base.tolerances.clone(),
            probe: Some(ProbeConfig {
                point: base.probe.as_ref().map_or_else(|| example.probe.clone(), |p| p.point.clone()),
            }),
            output: OutputConfig::default(),
            characteristics: base.characteristics.clone(),
            candidate: base.candidate.clone(),
        }
    }
}

fn borrow(c: &[(usize, usize, String)]) -> Vec<(usize, usize, &str)> {
    c.iter().map(|(i, j, s)| (*i, *j, s.as_str())).collect()
}

fn components(chart: &Chart, map: &BTreeMap<String, String>, what: &str) -> Result<Vec<(usize, usize, String)>> {
    let mut seen = Vec::new();
    let mut out = Vec::new();
    for (key, text) in map {
        let parts: Vec<&str> = key.split(',').map(str::trim).collect();
        let idx = |name: &str| {
            chart
                .axis(name)
                .ok_or_else(|| Error::Config(format!("[source.{what}] key `{key}`: unknown coordinate `{name}`")))
        };
        let [a, b] = parts[..] else {
            return Err(Error::Config(format!("[source.{what}] key `{key}` must name two coordinates")));
        };
        let (i, j) = (idx(a)?, idx(b)?);
        let (i, j) = (i.min(j), i.max(j));
        if seen.contains(&(i, j)) {
            return Err(Error::Config(format!("[source.{what}] component `{key}` given twice")));
        }
        seen.push((i, j));
        out.push((i, j, text.clone()));
    }
    Ok(out)
}
