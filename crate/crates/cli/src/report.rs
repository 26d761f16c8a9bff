//! Output files: `summary.json`, one CSV per table, and `manifest.json`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::ExperimentConfig;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format!("{x:.16e}"),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<i64> for Cell {
    fn from(i: i64) -> Self {
        Cell::Int(i)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
    }
}

/// Everything an experiment produces.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOutput {
    pub metrics: Map<String, Value>,
    pub pass: bool,
    pub tables: Vec<Table>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TableEntry {
    pub name: String,
    pub file: String,
    pub rows: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub command: String,
    pub seed: u64,
    pub pass: bool,
    pub metrics: Map<String, Value>,
    pub tables: Vec<TableEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub workers: usize,
    pub wall_clock_seconds: f64,
    pub pass: bool,
    pub metrics: Map<String, Value>,
    pub config: ExperimentConfig,
    pub files: Vec<String>,
}

pub const VERSION_TAG: &str = concat!("wickspde ", env!("CARGO_PKG_VERSION"));

/// Create the output directory and prove it is writable.
pub fn preflight(dir: &Path) -> Result<(), CliError> {
    let wrap = |source| CliError::Output { path: dir.display().to_string(), source };
    fs::create_dir_all(dir).map_err(wrap)?;
    let probe = dir.join(".wickspde-write-probe");
    fs::write(&probe, b"").map_err(wrap)?;
    fs::remove_file(&probe).map_err(wrap)?;
    Ok(())
}

pub fn summary(cfg: &ExperimentConfig, out: &RunOutput) -> Summary {
    Summary {
        command: cfg.command.name().into(),
        seed: cfg.seed,
        pass: out.pass,
        metrics: out.metrics.clone(),
        tables: out
            .tables
            .iter()
            .map(|t| TableEntry { name: t.name.clone(), file: t.file_name(), rows: t.rows.len() })
            .collect(),
    }
}

/// Write the summary, every table and the manifest; returns the paths written.
pub fn emit_report(
    dir: &Path,
    cfg: &ExperimentConfig,
    out: &RunOutput,
    workers: usize,
    wall_clock_seconds: f64,
) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    for t in &out.tables {
        let p = dir.join(t.file_name());
        fs::write(&p, t.to_csv()?)?;
        written.push(p);
    }
    let p = dir.join("summary.json");
    fs::write(&p, serde_json::to_string_pretty(&summary(cfg, out))? + "\n")?;
    written.push(p);
    let manifest = RunManifest {
        version: VERSION_TAG.into(),
        command: cfg.command.name().into(),
        seed: cfg.seed,
        workers,
        wall_clock_seconds,
        pass: out.pass,
        metrics: out.metrics.clone(),
        config: cfg.clone(),
        files: written.iter().filter_map(|p| p.file_name()).map(|f| f.to_string_lossy().into_owned()).collect(),
    };
    let p = dir.join("manifest.json");
    fs::write(&p, serde_json::to_string_pretty(&manifest)? + "\n")?;
    written.push(p);
    Ok(written)
}
