//! Suite reports and their JSON / CSV files.

use crate::check::{CheckRecord, IdentityReport};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Fields that change from run to run. Everything else is a function of
/// the config and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub timestamp: u64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub version: String,
    pub seed: u64,
    pub pass: bool,
    pub sections: Vec<String>,
    pub records: Vec<CheckRecord>,
    pub tables: Vec<Table>,
    pub notes: Vec<String>,
    pub meta: ReportMeta,
}

fn finite_or_max(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else if x == f64::NEG_INFINITY {
        f64::MIN
    } else {
        f64::MAX
    }
}

impl SuiteReport {
    pub fn new(suite: impl Into<String>, seed: u64) -> Self {
        let suite = suite.into();
        Self {
            sections: vec![suite.clone()],
            suite,
            version: VERSION.to_string(),
            seed,
            pass: true,
            records: Vec::new(),
            tables: Vec::new(),
            notes: Vec::new(),
            meta: ReportMeta { timestamp: 0, wall_time_s: 0.0 },
        }
    }

    pub fn push(&mut self, r: CheckRecord) {
        self.records.push(r);
    }

    pub fn extend(&mut self, rep: IdentityReport) {
        self.records.extend(rep.records);
        self.notes.extend(rep.notes);
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    /// A failing record standing in for a check that could not run.
    pub fn failed(&mut self, id: impl Into<String>, anchor: &str, err: &Error) {
        let id = id.into();
        self.notes.push(format!("{id}: {err}"));
        self.records.push(CheckRecord::new(id, anchor).input("error", err.to_string()).holds(false, f64::MAX));
    }

    pub fn get(&self, id: &str) -> Option<&CheckRecord> {
        self.records.iter().find(|r| r.check_id == id)
    }

    /// Sorts records, replaces non-finite numbers (JSON has none) and sets
    /// the overall verdict.
    pub fn finish(&mut self, wall_time_s: f64) {
        for r in &mut self.records {
            if !(r.value.is_finite() && r.residual.is_finite() && r.reference.is_none_or(f64::is_finite)) {
                r.value = finite_or_max(r.value);
                r.residual = finite_or_max(r.residual);
                r.reference = r.reference.map(finite_or_max);
                r.pass = false;
            }
        }
        self.records.sort_by(|a, b| a.check_id.cmp(&b.check_id));
        self.pass = self.records.iter().all(|r| r.pass);
        self.meta = ReportMeta {
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            wall_time_s,
        };
    }

    /// Merges finished suite reports into one, keeping their order as sections.
    pub fn combine(name: &str, seed: u64, parts: &[SuiteReport]) -> Self {
        let mut out = Self::new(name, seed);
        out.sections = parts.iter().map(|p| p.suite.clone()).collect();
        let mut wall = 0.0;
        for p in parts {
            out.records.extend(p.records.iter().cloned());
            out.notes.extend(p.notes.iter().map(|n| format!("[{}] {n}", p.suite)));
            out.tables.extend(p.tables.iter().map(|t| Table { name: format!("{}-{}", p.suite, t.name), ..t.clone() }));
            wall += p.meta.wall_time_s;
        }
        out.finish(wall);
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("bad report: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            _ => Err(Error::Config(format!("unknown format `{s}` (json or csv)"))),
        }
    }
}

const RECORD_COLUMNS: [&str; 8] = ["check_id", "anchor", "inputs", "value", "reference", "residual", "tol", "pass"];

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn write_table(path: &Path, columns: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(columns).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `<suite>.json`, or `<suite>.csv` (one row per record) plus one
/// `<suite>-<table>.csv` per table. Returns the paths written.
pub fn emit_report(report: &SuiteReport, format: Format, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    match format {
        Format::Json => {
            let path = dir.join(format!("{}.json", report.suite));
            std::fs::write(&path, report.to_json() + "\n")?;
            Ok(vec![path])
        }
        Format::Csv => {
            let path = dir.join(format!("{}.csv", report.suite));
            let columns: Vec<String> = RECORD_COLUMNS.iter().map(|c| c.to_string()).collect();
            write_table(
                &path,
                &columns,
                report.records.iter().map(|r| {
                    vec![
                        r.check_id.clone(),
                        r.anchor.clone(),
                        Value::Object(r.inputs.clone()).to_string(),
                        r.value.to_string(),
                        r.reference.map(|x| x.to_string()).unwrap_or_default(),
                        r.residual.to_string(),
                        r.tol.to_string(),
                        r.pass.to_string(),
                    ]
                }),
            )?;
            let mut out = vec![path];
            for t in &report.tables {
                let p = dir.join(format!("{}-{}.csv", report.suite, t.name));
                write_table(&p, &t.columns, t.rows.iter().map(|r| r.iter().map(cell).collect()))?;
                out.push(p);
            }
            Ok(out)
        }
    }
}
