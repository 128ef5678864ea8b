//! Tables and their CSV / JSON encodings.

use std::fmt::Write as _;

use serde_json::{Map, Value};

use crate::config::RunConfig;

pub const SCHEMA_VERSION: &str = "bosonic-lab/1";

#[derive(Clone, Copy, Debug)]
pub struct Column {
    pub name: &'static str,
    pub doc: &'static str,
}

pub const fn col(name: &'static str, doc: &'static str) -> Column {
    Column { name, doc }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(u64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    pub fn text(s: impl Into<String>) -> Cell {
        Cell::Text(s.into())
    }

    pub fn opt(v: Option<f64>) -> Cell {
        v.map_or(Cell::Empty, Cell::Real)
    }

    fn csv(&self) -> String {
        match self {
            Cell::Real(v) => format_real(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
            Cell::Text(s) if s.contains([',', '"', '\n', '\r']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Real(v) if v.is_finite() => Value::from(*v),
            Cell::Real(v) => Value::from(format_real(*v)),
            Cell::Int(v) => Value::from(*v),
            Cell::Bool(b) => Value::from(*b),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Empty => Value::Null,
        }
    }
}

/// 17 significant digits in scientific notation; enough to round-trip any
/// `f64`.
pub fn format_real(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

#[derive(Clone, Debug)]
pub struct Table {
    pub name: &'static str,
    pub columns: &'static [Column],
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &'static str, columns: &'static [Column]) -> Self {
        Table {
            name,
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width for {}", self.name);
        self.rows.push(row);
    }

    #[cfg(test)]
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn to_csv(&self, config: &RunConfig) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# schema_version={SCHEMA_VERSION} table={}", self.name);
        let _ = writeln!(s, "# config={}", config_json(config));
        let header: Vec<&str> = self.columns.iter().map(|c| c.name).collect();
        s.push_str(&header.join(","));
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    pub fn json_rows(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let mut obj = Map::new();
                    for (c, cell) in self.columns.iter().zip(row) {
                        obj.insert(c.name.to_string(), cell.json());
                    }
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

fn config_json(config: &RunConfig) -> String {
    serde_json::to_string(config).expect("RunConfig serializes")
}

/// `{schema_version, config, rows}`; further tables go under their names.
pub fn to_json(tables: &[Table], config: &RunConfig) -> String {
    let mut obj = Map::new();
    obj.insert("schema_version".into(), Value::from(SCHEMA_VERSION));
    obj.insert("config".into(), serde_json::to_value(config).expect("RunConfig serializes"));
    if let Some((first, rest)) = tables.split_first() {
        obj.insert("rows".into(), first.json_rows());
        for t in rest {
            obj.insert(t.name.to_string(), t.json_rows());
        }
    } else {
        obj.insert("rows".into(), Value::Array(Vec::new()));
    }
    let mut s = serde_json::to_string_pretty(&Value::Object(obj)).expect("JSON encodes");
    s.push('\n');
    s
}

/// `table,column,description` for every documented column.
pub fn schema_dump(tables: &[(&'static str, &'static [Column])]) -> String {
    let mut s = format!("# schema_version={SCHEMA_VERSION}\ntable,column,description\n");
    for (name, cols) in tables {
        for c in cols.iter() {
            let _ = writeln!(s, "{},{},{}", name, c.name, Cell::text(c.doc).csv());
        }
    }
    s
}
