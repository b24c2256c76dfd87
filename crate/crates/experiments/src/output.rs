//! Study results and their on-disk form: one CSV per table and a JSON summary.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Serialize, Serializer};

use crate::config::{ExperimentConfig, Study};
use crate::error::{ExpError, Result};
use crate::stats::Summary;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
    Flag(bool),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Num(v) => write!(f, "{v:e}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Flag(b) => write!(f, "{b}"),
        }
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Cell::Int(v) => s.serialize_i64(*v),
            Cell::Num(v) => s.serialize_f64(*v),
            Cell::Text(v) => s.serialize_str(v),
            Cell::Flag(v) => s.serialize_bool(*v),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Flag(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len(), "row width of table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Numeric column values, skipping non-numeric cells.
    pub fn numbers(&self, name: &str) -> Vec<f64> {
        let Some(c) = self.column(name) else {
            return Vec::new();
        };
        self.rows
            .iter()
            .filter_map(|r| match r[c] {
                Cell::Num(v) => Some(v),
                Cell::Int(v) => Some(v as f64),
                _ => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedSummary {
    pub name: String,
    #[serde(flatten)]
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CriterionOutcome {
    pub fn new(id: u8, name: &str, passed: bool, detail: String) -> Self {
        CriterionOutcome {
            id,
            name: name.to_string(),
            passed,
            detail,
        }
    }

    /// `PASS [4] name: detail`
    pub fn line(&self) -> String {
        format!(
            "{} [{}] {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyResult {
    pub study: Study,
    pub version: &'static str,
    pub gaussian_sampler: &'static str,
    pub config: ExperimentConfig,
    pub tables: Vec<Table>,
    pub summaries: Vec<NamedSummary>,
    pub criteria: Vec<CriterionOutcome>,
    pub wall_time_s: f64,
}

impl StudyResult {
    pub fn new(study: Study, config: &ExperimentConfig) -> Self {
        StudyResult {
            study,
            version: env!("CARGO_PKG_VERSION"),
            gaussian_sampler: brox_core::path::GAUSSIAN_SAMPLER,
            config: config.clone(),
            tables: Vec::new(),
            summaries: Vec::new(),
            criteria: Vec::new(),
            wall_time_s: 0.0,
        }
    }

    pub fn summarize(&mut self, name: impl Into<String>, values: &[f64]) {
        self.summaries.push(NamedSummary {
            name: name.into(),
            summary: Summary::of(values),
        });
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn criterion(&self, id: u8) -> Option<&CriterionOutcome> {
        self.criteria.iter().find(|c| c.id == id)
    }

    pub fn all_passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExpError + '_ {
    move |source| ExpError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `<table>.csv` for every table and `summary.json`; returns the paths.
pub fn write_results(result: &StudyResult, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    for table in &result.tables {
        let path = dir.join(format!("{}.csv", table.name));
        let file = fs::File::create(&path).map_err(io_err(&path))?;
        let mut w = csv::Writer::from_writer(file);
        let csv_err = |source| ExpError::Csv {
            path: path.clone(),
            source,
        };
        w.write_record(&table.header).map_err(csv_err)?;
        for row in &table.rows {
            w.write_record(row.iter().map(|c| c.to_string())).map_err(csv_err)?;
        }
        w.flush().map_err(io_err(&path))?;
        written.push(path);
    }
    let path = dir.join("summary.json");
    let text = serde_json::to_string_pretty(result).map_err(|source| ExpError::Json {
        path: path.clone(),
        source,
    })?;
    fs::write(&path, text + "\n").map_err(io_err(&path))?;
    written.push(path);
    Ok(written)
}
