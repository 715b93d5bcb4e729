use std::path::Path;

use serde::Serialize;

use super::config::RunConfig;
use crate::error::{Error, Result};
use crate::gallery::ExampleInfo;
use crate::geometry::Grid;

/// Version of the JSON report layout. Bumped on any incompatible change.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

impl Default for ToolInfo {
    fn default() -> Self {
        Self {
            name: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

/// One command's JSON document. `wall_time_s` is the only field that
/// varies between identical runs.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: ToolInfo,
    pub command: String,
    pub config: RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<ExampleInfo>,
    pub pass: bool,
    pub results: serde_json::Value,
    pub wall_time_s: f64,
}

/// Node values destined for a CSV file: coordinates first, then the named
/// columns. Missing values are written as `nan`.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    /// One row per grid node with `coordinates..., columns...`.
    pub fn over_grid(name: &str, grid: &Grid, columns: &[&str], values: impl Fn(usize) -> Vec<Option<f64>>) -> Self {
        let mut header: Vec<String> = grid.chart().coord_names().to_vec();
        header.extend(columns.iter().map(|c| c.to_string()));
        let rows = (0..grid.len())
            .map(|i| {
                let mut r: Vec<Option<f64>> = grid.point(i).into_iter().map(Some).collect();
                r.extend(values(i));
                r
            })
            .collect();
        Self {
            name: name.into(),
            columns: header,
            rows,
        }
    }

    pub fn write<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let err = |e: csv::Error| Error::Io(e.to_string());
        out.write_record(&self.columns).map_err(err)?;
        for row in &self.rows {
            let rec: Vec<String> = row
                .iter()
                .map(|v| v.map_or_else(|| "nan".to_string(), |x| format!("{x:.16e}")))
                .collect();
            out.write_record(&rec).map_err(err)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Writes `<command>.json` and `<command>_<table>.csv` files into `dir`.
pub fn write_outputs(dir: &Path, report: &Report, tables: &[Table], json: bool, csv: bool) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    if json {
        std::fs::write(dir.join(format!("{}.json", report.command)), to_json(report)? + "\n")?;
    }
    if csv {
        for t in tables {
            let f = std::fs::File::create(dir.join(format!("{}_{}.csv", report.command, t.name)))?;
            t.write(std::io::BufWriter::new(f))?;
        }
    }
    Ok(())
}

pub fn to_json(report: &Report) -> Result<String> {
    serde_json::to_string_pretty(report).map_err(|e| Error::Io(e.to_string()))
}
