//! Tabular reports written as CSV (schema line, header, rows) or JSON.

use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Version of the column layout; bumped whenever a command's columns change.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Bool(bool),
    Str(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => format!("{x}"),
            Cell::Int(n) => n.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Str(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => serde_json::Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Cell::Int(n) => Value::from(*n),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Str(s) => Value::String(s.clone()),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<u64> for Cell {
    fn from(n: u64) -> Self {
        Cell::Int(n)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as u64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Str(s.to_owned())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Str(s)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// One named pass/fail result. Only `required` checks decide the exit code;
/// the others are flags carried for the reader.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub required: bool,
    pub value: Option<f64>,
    pub detail: String,
}

impl Check {
    pub fn required(name: impl Into<String>, passed: bool, value: Option<f64>, detail: impl Into<String>) -> Self {
        Check { name: name.into(), passed, required: true, value, detail: detail.into() }
    }

    pub fn flag(name: impl Into<String>, passed: bool, value: Option<f64>, detail: impl Into<String>) -> Self {
        Check { name: name.into(), passed, required: false, value, detail: detail.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    pub seed: Option<u64>,
    pub version: String,
    pub config_hash: String,
}

impl Meta {
    pub fn new(seed: Option<u64>, config_bytes: &[u8]) -> Self {
        Meta { seed, version: env!("CARGO_PKG_VERSION").to_owned(), config_hash: config_hash(config_bytes) }
    }
}

pub fn config_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug)]
pub struct Report {
    pub command: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub checks: Vec<Check>,
    pub meta: Meta,
}

/// The JSON report as read back; unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportDoc {
    pub schema: u32,
    pub command: String,
    pub columns: Vec<String>,
    pub rows: Vec<Map<String, Value>>,
    pub checks: Vec<Check>,
    pub meta: Meta,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Report {
    pub fn new(command: &str, columns: Vec<&'static str>, meta: Meta) -> Self {
        Report { command: command.to_owned(), columns, rows: Vec::new(), checks: Vec::new(), meta }
    }

    pub fn push_row(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the columns of `{}`", self.command);
        self.rows.push(row);
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.required && !c.passed)
    }

    pub fn passed(&self) -> bool {
        self.failed_checks().next().is_none()
    }

    pub fn to_doc(&self) -> ReportDoc {
        let rows = self
            .rows
            .iter()
            .map(|r| self.columns.iter().zip(r).map(|(c, v)| ((*c).to_owned(), v.json())).collect())
            .collect();
        ReportDoc {
            schema: SCHEMA_VERSION,
            command: self.command.clone(),
            columns: self.columns.iter().map(|c| (*c).to_owned()).collect(),
            rows,
            checks: self.checks.clone(),
            meta: self.meta.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_doc()).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> CliResult<String> {
        let mut out = format!("# schema={SCHEMA_VERSION}\n").into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(&self.columns).map_err(csv_err)?;
            for r in &self.rows {
                w.write_record(r.iter().map(Cell::csv)).map_err(csv_err)?;
            }
            w.flush()?;
        }
        Ok(String::from_utf8(out).expect("csv output is utf-8"))
    }

    pub fn render(&self, format: Format) -> CliResult<String> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => Ok(self.to_json()),
        }
    }

    /// Human summary of the checks, for stderr.
    pub fn check_summary(&self, mut w: impl Write) -> std::io::Result<()> {
        for c in &self.checks {
            let status = match (c.passed, c.required) {
                (true, _) => "ok",
                (false, true) => "FAIL",
                (false, false) => "flag",
            };
            let value = c.value.map(|v| format!(" ({v:e})")).unwrap_or_default();
            writeln!(w, "[{status}] {}{value}: {}", c.name, c.detail)?;
        }
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}

/// Checks a JSON report against the published layout: known keys only,
/// matching schema version, and every row carrying exactly the columns.
pub fn validate_json(text: &str) -> Result<ReportDoc, String> {
    let doc: ReportDoc = serde_json::from_str(text).map_err(|e| e.to_string())?;
    if doc.schema != SCHEMA_VERSION {
        return Err(format!("schema {} is not {SCHEMA_VERSION}", doc.schema));
    }
    for (i, row) in doc.rows.iter().enumerate() {
        if row.len() != doc.columns.len() || !doc.columns.iter().zip(row.keys()).all(|(c, k)| c == k) {
            return Err(format!("row {i} does not match the column list"));
        }
        if let Some((k, v)) = row.iter().find(|(_, v)| v.is_array() || v.is_object()) {
            return Err(format!("row {i} column {k} holds a non-scalar {v}"));
        }
    }
    if doc.meta.config_hash.len() != 64 || !doc.meta.config_hash.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(String::from("config_hash is not a sha-256 hex digest"));
    }
    Ok(doc)
}
