use std::fmt::Write as _;

use serde_json::{Map, Value};

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => sig9(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => serde_json::Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Cell::Int(n) => Value::from(*n),
            Cell::Text(s) => Value::from(s.clone()),
            Cell::Bool(b) => Value::from(*b),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<u32> for Cell {
    fn from(n: u32) -> Self {
        Cell::Int(u64::from(n))
    }
}

impl From<u64> for Cell {
    fn from(n: u64) -> Self {
        Cell::Int(n)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_owned())
    }
}

/// Decimal rendering with nine significant digits.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_owned();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".to_owned()
        } else if x > 0.0 {
            "inf".to_owned()
        } else {
            "-inf".to_owned()
        };
    }
    // The exponent after rounding to nine digits decides the decimal count.
    let sci = format!("{x:.8e}");
    let exp: i32 = sci[sci.find('e').expect("exponent") + 1..]
        .parse()
        .expect("integer exponent");
    if !(-5..15).contains(&exp) {
        return sci;
    }
    let decimals = (8 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

/// A rendered result: resolved configuration, rows and metadata.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: String,
    pub config: Map<String, Value>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub meta: Map<String, Value>,
}

impl Report {
    pub fn new(command: &str, config: Map<String, Value>, columns: Vec<&'static str>) -> Self {
        let mut meta = Map::new();
        meta.insert("tool".into(), Value::from("fincov"));
        meta.insert("version".into(), Value::from(env!("CARGO_PKG_VERSION")));
        meta.insert("command".into(), Value::from(command));
        Self {
            command: command.to_owned(),
            config,
            columns,
            rows: Vec::new(),
            meta,
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn csv(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "# fincov {} {}",
            env!("CARGO_PKG_VERSION"),
            self.command
        )
        .unwrap();
        for (k, v) in &self.config {
            writeln!(out, "# {k}={}", header_value(v)).unwrap();
        }
        for (k, v) in &self.meta {
            if matches!(k.as_str(), "tool" | "version" | "command") {
                continue;
            }
            writeln!(out, "# meta.{k}={}", header_value(v)).unwrap();
        }
        writeln!(out, "{}", self.columns.join(",")).unwrap();
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            writeln!(out, "{}", cells.join(",")).unwrap();
        }
        out
    }

    pub fn json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, v)| ((*c).to_owned(), v.json()))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        let mut root = Map::new();
        root.insert("config".into(), Value::Object(self.config.clone()));
        root.insert("rows".into(), Value::Array(rows));
        root.insert("meta".into(), Value::Object(self.meta.clone()));
        let mut s =
            serde_json::to_string_pretty(&Value::Object(root)).expect("JSON values serialize");
        s.push('\n');
        s
    }
}

fn header_value(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        Value::Array(items) => items.iter().map(header_value).collect::<Vec<_>>().join(";"),
        Value::Null => "none".to_owned(),
        other => other.to_string(),
    }
}
