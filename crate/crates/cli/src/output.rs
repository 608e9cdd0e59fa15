//! Tabular output as CSV (with a `#` metadata line) or a single JSON object.

use std::io::Write;

use anyhow::Result;
use serde_json::{Map, Value};

use crate::config::{RunConfig, ECHO_PREFIX};

/// Version of the CSV columns and JSON field names.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => anyhow::bail!("unknown format '{other}' (csv|json)"),
        }
    }
}

/// A cell value; kept typed so JSON gets numbers and booleans.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Bool(bool),
    Text(String),
    Missing,
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Missing, Into::into)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => Value::from(*v),
            Cell::Float(v) if v.is_finite() => Value::from(*v),
            Cell::Float(_) | Cell::Missing => Value::Null,
            Cell::Bool(v) => Value::from(*v),
            Cell::Text(s) => Value::from(s.as_str()),
        }
    }
}

/// Rows under fixed column names, plus run metadata.
#[derive(Debug, Clone)]
pub struct Table {
    pub command: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Extra metadata beyond the resolved configuration.
    pub extra: Vec<(String, Cell)>,
}

impl Table {
    pub fn new(command: &str, columns: Vec<&'static str>) -> Self {
        Table {
            command: command.to_string(),
            columns,
            rows: Vec::new(),
            extra: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn meta(&mut self, key: &str, value: impl Into<Cell>) {
        self.extra.push((key.to_string(), value.into()));
    }

    pub fn write<W: Write>(&self, config: &RunConfig, format: Format, mut out: W) -> Result<()> {
        match format {
            Format::Csv => {
                writeln!(out, "{ECHO_PREFIX} command={} {}", self.command, config.echo())?;
                if !self.extra.is_empty() {
                    let extra: Vec<String> = self.extra.iter().map(|(k, v)| format!("{k}={}", v.csv())).collect();
                    writeln!(out, "# schema={SCHEMA_VERSION} {}", extra.join(" "))?;
                } else {
                    writeln!(out, "# schema={SCHEMA_VERSION}")?;
                }
                writeln!(out, "{}", self.columns.join(","))?;
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                    writeln!(out, "{}", cells.join(","))?;
                }
            }
            Format::Json => {
                let mut cfg = Map::new();
                for (k, v) in config.iter() {
                    cfg.insert(k.to_string(), Value::from(v));
                }
                let mut meta = Map::new();
                meta.insert("schema".into(), Value::from(SCHEMA_VERSION));
                meta.insert("command".into(), Value::from(self.command.as_str()));
                meta.insert("config".into(), Value::Object(cfg));
                for (k, v) in &self.extra {
                    meta.insert(k.clone(), v.json());
                }
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        Value::Object(self.columns.iter().zip(row).map(|(c, v)| (c.to_string(), v.json())).collect())
                    })
                    .collect();
                let mut top = Map::new();
                top.insert("metadata".into(), Value::Object(meta));
                top.insert("rows".into(), Value::Array(rows));
                serde_json::to_writer_pretty(&mut out, &Value::Object(top))?;
                writeln!(out)?;
            }
        }
        Ok(())
    }
}
