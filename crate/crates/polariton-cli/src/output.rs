//! Tables and their CSV / JSON serialisation.

use std::fmt::Write as _;

use serde_json::{Map, Value};

use crate::config::Format;

/// Column-set version written to every metadata sidecar.
pub const SCHEMA_VERSION: u32 = 1;
pub const ERROR_COLUMN: &str = "error_code";

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}
impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::I(x as i64)
    }
}
impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::S(x.to_string())
    }
}
impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::F)
    }
}

/// A failed row keeps its input coordinates, which fill the leading columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub inputs: Vec<Cell>,
    pub code: &'static str,
}

/// A row either holds one cell per column or a failure.
pub type Row = Result<Vec<Cell>, Failure>;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Row>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>, rows: Vec<Row>) -> Self {
        Self { columns, rows }
    }

    pub fn failed(&self) -> usize {
        self.rows.iter().filter(|r| r.is_err()).count()
    }

    /// Columns as written: the error column appears only when a row failed.
    pub fn written_columns(&self) -> Vec<&'static str> {
        let mut c = self.columns.clone();
        if self.failed() > 0 {
            c.push(ERROR_COLUMN);
        }
        c
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    pub fn to_csv(&self) -> String {
        let with_err = self.failed() > 0;
        let mut out = self.written_columns().join(",");
        out.push('\n');
        for row in &self.rows {
            match row {
                Ok(cells) => {
                    let mut line: Vec<String> = cells.iter().map(csv_cell).collect();
                    if with_err {
                        line.push(String::new());
                    }
                    out.push_str(&line.join(","));
                }
                Err(fail) => {
                    let mut line = vec![String::new(); self.columns.len()];
                    for (slot, c) in line.iter_mut().zip(&fail.inputs) {
                        *slot = csv_cell(c);
                    }
                    line.push(fail.code.to_string());
                    out.push_str(&line.join(","));
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut m = Map::new();
                match row {
                    Ok(cells) => {
                        for (c, v) in self.columns.iter().zip(cells) {
                            m.insert(c.to_string(), json_cell(v));
                        }
                    }
                    Err(fail) => {
                        for (c, v) in self.columns.iter().zip(&fail.inputs) {
                            m.insert(c.to_string(), json_cell(v));
                        }
                        m.insert(
                            ERROR_COLUMN.to_string(),
                            Value::String(fail.code.to_string()),
                        );
                    }
                }
                Value::Object(m)
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&Value::Array(rows)).expect("serialisable");
        s.push('\n');
        s
    }
}

/// Shortest representation that parses back to the same f64.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let plain = format!("{x}");
    let sci = format!("{x:e}");
    if sci.len() < plain.len() {
        sci
    } else {
        plain
    }
}

fn csv_cell(c: &Cell) -> String {
    match c {
        Cell::F(x) => fmt_f64(*x),
        Cell::I(i) => i.to_string(),
        Cell::S(s) => {
            if s.contains([',', '"', '\n']) {
                let mut q = String::from('"');
                for ch in s.chars() {
                    if ch == '"' {
                        q.push('"');
                    }
                    q.push(ch);
                }
                q.push('"');
                q
            } else {
                s.clone()
            }
        }
        Cell::Empty => String::new(),
    }
}

fn json_cell(c: &Cell) -> Value {
    match c {
        Cell::F(x) => serde_json::Number::from_f64(*x).map_or(Value::Null, Value::Number),
        Cell::I(i) => Value::from(*i),
        Cell::S(s) => Value::String(s.clone()),
        Cell::Empty => Value::Null,
    }
}

/// Tiny helper for human-readable summaries on stderr.
pub fn summary_line(table: &Table) -> String {
    let mut s = String::new();
    let _ = write!(s, "{} rows", table.rows.len());
    if table.failed() > 0 {
        let _ = write!(s, ", {} failed", table.failed());
    }
    s
}
