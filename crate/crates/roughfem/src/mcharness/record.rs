use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::experiments::ExperimentConfig;
use super::Exclusion;
use crate::error::{invalid, Result};
use crate::stats::sample_stats;

/// One CSV cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Text(String),
    Missing,
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Float(x) => Some(*x),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            // `Display` for f64 prints the shortest string that parses back
            // to the same bits.
            Value::Float(x) => write!(f, "{x}"),
            Value::Text(s) => f.write_str(s),
            Value::Missing => Ok(()),
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Float(x)
    }
}

impl From<usize> for Value {
    fn from(i: usize) -> Self {
        Value::Int(i as i64)
    }
}

impl From<u32> for Value {
    fn from(i: u32) -> Self {
        Value::Int(i as i64)
    }
}

impl From<u64> for Value {
    fn from(i: u64) -> Self {
        Value::Int(i as i64)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.into())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Text(s)
    }
}

impl<T: Into<Value>> From<Option<T>> for Value {
    fn from(v: Option<T>) -> Self {
        v.map_or(Value::Missing, Into::into)
    }
}

/// A named CSV table.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric values of `column` in rows where `filter` holds.
    pub fn values_where(&self, column: &str, filter: impl Fn(&[Value]) -> bool) -> Vec<f64> {
        let Some(c) = self.column(column) else {
            return Vec::new();
        };
        self.rows
            .iter()
            .filter(|r| filter(r))
            .filter_map(|r| r[c].as_f64())
            .collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Mean, sample standard deviation and standard error of one quantity.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub quantity: String,
    pub count: usize,
    pub excluded: usize,
    pub mean: f64,
    pub sigma_s: f64,
    pub sigma_m: f64,
}

/// Summary of `column` over the rows selected by `filter`; `None` when
/// fewer than two values leave the standard error undefined.
pub fn summarize(
    table: &Table,
    quantity: impl Into<String>,
    column: &str,
    excluded: usize,
    filter: impl Fn(&[Value]) -> bool,
) -> Result<Option<SummaryRow>> {
    let quantity = quantity.into();
    let values = table.values_where(column, filter);
    if values.len() < 2 {
        return Ok(None);
    }
    let s = sample_stats(&values).map_err(|e| invalid("summary", format!("{quantity}: {e}")))?;
    Ok(Some(SummaryRow {
        quantity,
        count: s.count,
        excluded,
        mean: s.mean,
        sigma_s: s.sigma_s,
        sigma_m: s.sigma_m,
    }))
}

#[derive(Serialize)]
struct Snapshot<'a> {
    started_unix_seconds: u64,
    wall_seconds: f64,
    threads: usize,
    config: &'a ExperimentConfig,
}

/// Everything a run produced.
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    /// Per-sample rows, written to `rows.csv`.
    pub rows: Table,
    pub summary: Vec<SummaryRow>,
    pub exclusions: Vec<Exclusion>,
    /// Further tables written as `<name>.csv`.
    pub extra: Vec<(String, Table)>,
    pub warnings: Vec<String>,
    pub started_unix_seconds: u64,
    pub wall_seconds: f64,
}

impl RunRecord {
    pub fn extra(&self, name: &str) -> Option<&Table> {
        self.extra.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    /// Writes `config.toml`, `rows.csv`, `summary.csv`, `exclusions.csv` and
    /// the extra tables into `dir`. Only `config.toml` carries wall-clock data.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let snapshot = Snapshot {
            started_unix_seconds: self.started_unix_seconds,
            wall_seconds: self.wall_seconds,
            threads: rayon::current_num_threads(),
            config: &self.config,
        };
        let path = dir.join("config.toml");
        std::fs::write(&path, toml::to_string(&snapshot)?)?;
        written.push(path);

        let path = dir.join("rows.csv");
        self.rows.write_csv(&path)?;
        written.push(path);

        let path = dir.join("summary.csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["quantity", "count", "excluded", "mean", "sigma_s", "sigma_m"])?;
        for s in &self.summary {
            w.write_record([
                s.quantity.clone(),
                s.count.to_string(),
                s.excluded.to_string(),
                s.mean.to_string(),
                s.sigma_s.to_string(),
                s.sigma_m.to_string(),
            ])?;
        }
        w.flush()?;
        written.push(path);

        let path = dir.join("exclusions.csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["sample", "reason"])?;
        for e in &self.exclusions {
            w.write_record([e.sample.to_string(), e.reason.clone()])?;
        }
        w.flush()?;
        written.push(path);

        for (name, table) in &self.extra {
            let path = dir.join(format!("{name}.csv"));
            table.write_csv(&path)?;
            written.push(path);
        }
        Ok(written)
    }
}
