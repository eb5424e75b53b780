//! CSV and JSON artifacts. Floats are written in shortest round-trip form.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde_json::{Map, Value};

use crate::config::Format;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            // Debug is the shortest representation that parses back to the same value
            Cell::Num(x) => format!("{x:?}"),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => num(*x),
            Cell::Int(i) => Value::from(*i),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Bool(b) => Value::from(*b),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as u64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

/// JSON number, or null for non-finite values.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::csv).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// Result of one task.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub task: &'static str,
    pub table: Table,
    pub summary: Map<String, Value>,
    /// Set by `verify`; `Some(false)` makes the run fail.
    pub passed: Option<bool>,
}

impl Report {
    pub fn new(task: &'static str, table: Table) -> Self {
        Self {
            task,
            table,
            summary: Map::new(),
            passed: None,
        }
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.to_string(), value.into());
    }

    pub fn set_num(&mut self, key: &str, x: f64) {
        self.summary.insert(key.to_string(), num(x));
    }

    /// Writes the artifacts into `dir` and returns their paths.
    pub fn write(&self, dir: &Path, format: Format) -> anyhow::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut summary = self.summary.clone();
        summary.insert("task".into(), Value::from(self.task));
        summary.insert("version".into(), Value::from(env!("CARGO_PKG_VERSION")));
        let written = match format {
            Format::Csv => {
                let csv = dir.join(format!("{}.csv", self.task));
                let mut buf = Vec::new();
                self.table.write_csv(&mut buf)?;
                fs::write(&csv, buf).with_context(|| format!("writing {}", csv.display()))?;
                let json = dir.join(format!("{}.summary.json", self.task));
                write_json(&json, &Value::Object(summary))?;
                vec![csv, json]
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .table
                    .rows
                    .iter()
                    .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
                    .collect();
                let mut doc = Map::new();
                doc.insert("columns".into(), Value::from(self.table.columns.clone()));
                doc.insert("rows".into(), Value::Array(rows));
                doc.insert("summary".into(), Value::Object(summary));
                let json = dir.join(format!("{}.json", self.task));
                write_json(&json, &Value::Object(doc))?;
                vec![json]
            }
        };
        Ok(written)
    }
}

fn write_json(path: &Path, value: &Value) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
