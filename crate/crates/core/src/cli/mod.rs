//! Command-line driver: configuration files, flag overrides, and JSON/CSV
//! reports.
//!
//! Exit codes: 0 when every check passes, 1 when a verification fails (a
//! report is still written), 2 for configuration and domain errors.
//! `CODAZZI_LAB_THREADS` caps the worker pool.

pub mod commands;
pub mod config;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};

pub use config::{Format, RunConfig};
pub use report::{Report, Table, SCHEMA_VERSION};

use crate::error::{Error, Result};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "CODAZZI_LAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "codazzi-lab", version, about = "Verification of Codazzi tensors and warped-product structure")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Options,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Codazzi residual over the grid.
    VerifyCodazzi,
    /// Eigen-data, sign-continuous frames and the eigendistribution identities.
    AnalyzeEigen,
    /// The four equivalent warped-product conditions and warp extraction.
    CheckConditions,
    /// Numerical kernel of Hess f = a g and the warped verdict.
    DetectWarped,
    /// Residual of the characteristics equation for mu.
    Characteristics,
    /// Runs the named examples through every claim they illustrate.
    ReproducePaper,
    /// Writes a self-contained configuration for the selected source.
    ExportConfig,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::VerifyCodazzi => "verify-codazzi",
            Command::AnalyzeEigen => "analyze-eigen",
            Command::CheckConditions => "check-conditions",
            Command::DetectWarped => "detect-warped",
            Command::Characteristics => "characteristics",
            Command::ReproducePaper => "reproduce-paper",
            Command::ExportConfig => "export-config",
        }
    }
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct Options {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Named example; replaces the configured source.
    #[arg(long, global = true)]
    pub example: Option<String>,
    /// Samples per axis for every grid.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Tolerance override, e.g. `--tol codazzi=1e-9`. Repeatable.
    #[arg(long = "tol", value_name = "NAME=VALUE", global = true)]
    pub tol: Vec<String>,
    /// Output directory; without it the JSON report goes to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

impl Options {
    /// The configuration file (or defaults) with flags applied on top.
    pub fn effective_config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(id) = &self.example {
            cfg.source = config::SourceConfig {
                example: Some(id.clone()),
                ..Default::default()
            };
        }
        if let Some(n) = self.grid {
            cfg.grid = Some(config::GridConfig {
                n: Some(n),
                ..Default::default()
            });
        }
        for t in &self.tol {
            let (name, value) = t
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--tol expects NAME=VALUE, got `{t}`")))?;
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("--tol {name}: `{value}` is not a number")))?;
            cfg.tolerances.set(name.trim(), v)?;
        }
        if let Some(d) = &self.out {
            cfg.output.dir = Some(d.clone());
        }
        if let Some(f) = self.format {
            cfg.output.format = f;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }
}

/// Runs one command and returns its report; no files are written.
pub fn execute(command: Command, cfg: &RunConfig) -> Result<(Report, Vec<Table>)> {
    let start = Instant::now();
    let (source, outcome) = if command == Command::ReproducePaper {
        (None, commands::reproduce(cfg)?)
    } else {
        let ex = cfg.resolve()?;
        let out = match command {
            Command::VerifyCodazzi => commands::verify_codazzi(cfg, &ex)?,
            Command::AnalyzeEigen => commands::analyze_eigen(cfg, &ex)?,
            Command::CheckConditions => commands::check_conditions(cfg, &ex)?,
            Command::DetectWarped => commands::detect(cfg, &ex)?,
            Command::Characteristics => commands::characteristics(cfg, &ex)?,
            Command::ReproducePaper | Command::ExportConfig => unreachable!("handled by the caller"),
        };
        (Some(ex.info()), out)
    };
    let report = Report {
        schema_version: SCHEMA_VERSION,
        tool: Default::default(),
        command: command.name().into(),
        config: cfg.clone(),
        source,
        pass: outcome.pass,
        results: outcome.results,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    Ok((report, outcome.tables))
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
    // a pool that already exists keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<i32> {
    init_threads()?;
    let cfg = cli.opts.effective_config()?;
    let format = cfg.output.format;
    if cli.command == Command::ExportConfig {
        let ex = cfg.resolve()?;
        let text = RunConfig::export(&ex, &cfg).to_toml()?;
        match &cfg.output.dir {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                std::fs::write(dir.join("config.toml"), text)?;
            }
            None => print!("{text}"),
        }
        return Ok(EXIT_PASS);
    }
    let (report, tables) = execute(cli.command, &cfg)?;
    match &cfg.output.dir {
        Some(dir) => report::write_outputs(dir, &report, &tables, format.json(), format.csv())?,
        None if format == Format::Json => println!("{}", report::to_json(&report)?),
        None => return Err(Error::Config("--format csv and both need --out".into())),
    }
    Ok(if report.pass { EXIT_PASS } else { EXIT_FAIL })
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
