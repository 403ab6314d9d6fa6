//! Rendering of output documents.
//!
//! Every floating-point number is written with 17 significant digits in
//! exponent form (`6.3042421810440852e0`), which round-trips any double.
//! JSON objects keep their keys sorted; CSV files open with `# key: value`
//! metadata lines followed by a header row.

use std::fmt::Write as _;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{Map, Value};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

pub fn number(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("output types serialize to JSON")
}

#[derive(Debug, Clone)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => number(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => csv_text(s),
        }
    }
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

/// A self-describing result: metadata, parameters and payload.
#[derive(Debug, Clone)]
pub struct Document {
    pub command: &'static str,
    pub normalization: &'static str,
    pub parameters: Map<String, Value>,
    pub result: Value,
    /// Row form for CSV; when absent the result is flattened to
    /// `field,value` pairs.
    pub table: Option<Table>,
}

impl Document {
    fn metadata(&self) -> Vec<(String, Value)> {
        vec![
            ("schema_version".into(), Value::from(SCHEMA_VERSION)),
            ("version".into(), Value::from(env!("CARGO_PKG_VERSION"))),
            ("command".into(), Value::from(self.command)),
            ("normalization".into(), Value::from(self.normalization)),
        ]
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.render_json(),
            Format::Csv => self.render_csv(),
        }
    }

    fn render_json(&self) -> String {
        let mut top = Map::new();
        for (k, v) in self.metadata() {
            top.insert(k, v);
        }
        top.insert("parameters".into(), Value::Object(self.parameters.clone()));
        top.insert("result".into(), self.result.clone());
        let mut out = String::new();
        write_json(&mut out, &Value::Object(top), 0);
        out.push('\n');
        out
    }

    fn render_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.metadata() {
            let _ = writeln!(out, "# {k}: {}", scalar_text(&v));
        }
        for (k, v) in &self.parameters {
            let _ = writeln!(out, "# {k}: {}", scalar_text(v));
        }
        let table = match &self.table {
            Some(t) => t.clone(),
            None => {
                let mut rows = Vec::new();
                flatten(&self.result, String::new(), &mut rows);
                Table {
                    header: vec!["field", "value"],
                    rows,
                }
            }
        };
        out.push_str(&table.header.join(","));
        out.push('\n');
        for row in &table.rows {
            let line: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::Null => "null".into(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => number_text(n),
        Value::String(s) => s.clone(),
        other => {
            let mut s = String::new();
            write_json(&mut s, other, 0);
            s.replace('\n', " ")
        }
    }
}

fn number_text(n: &serde_json::Number) -> String {
    if let Some(i) = n.as_i64() {
        i.to_string()
    } else if let Some(u) = n.as_u64() {
        u.to_string()
    } else {
        number(n.as_f64().unwrap_or(f64::NAN))
    }
}

fn flatten(v: &Value, path: String, rows: &mut Vec<Vec<Cell>>) {
    let key = |k: &str| {
        if path.is_empty() {
            k.to_string()
        } else {
            format!("{path}.{k}")
        }
    };
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                flatten(child, key(k), rows);
            }
        }
        Value::Array(items) => {
            for (i, child) in items.iter().enumerate() {
                flatten(child, key(&i.to_string()), rows);
            }
        }
        Value::Number(n) => {
            let cell = if let Some(i) = n.as_i64() {
                Cell::Int(i)
            } else {
                Cell::Num(n.as_f64().unwrap_or(f64::NAN))
            };
            rows.push(vec![Cell::Text(path), cell]);
        }
        other => rows.push(vec![Cell::Text(path), Cell::Text(scalar_text(other))]),
    }
}

fn is_scalar(v: &Value) -> bool {
    !matches!(v, Value::Array(_) | Value::Object(_))
}

fn write_json(out: &mut String, v: &Value, indent: usize) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            let text = number_text(n);
            // non-finite values have no JSON spelling
            if matches!(text.as_str(), "nan" | "inf" | "-inf") {
                out.push_str("null");
            } else {
                out.push_str(&text);
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string")),
        Value::Array(items) if items.iter().all(is_scalar) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_json(out, item, indent);
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_json(out, item, indent + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for (i, (k, item)) in map.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&serde_json::to_string(k).expect("key"));
                out.push_str(": ");
                write_json(out, item, indent + 1);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for &x in &[0.1, 1.0 / 3.0, 6.304242181044085, -2.5e-300, 1e300] {
            let s = number(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(number(7.5), "7.5000000000000000e0");
    }

    #[test]
    fn json_is_valid_and_keeps_integers() {
        let mut parameters = Map::new();
        parameters.insert("N".into(), Value::from(4000u64));
        parameters.insert("omega".into(), Value::from(10.0));
        let doc = Document {
            command: "spectrum",
            normalization: "V",
            parameters,
            result: serde_json::json!({"levels": [1.0, 2.5], "flag": true, "nested": {"x": f64::NAN}}),
            table: None,
        };
        let text = doc.render(Format::Json);
        let parsed: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed["parameters"]["N"], 4000);
        assert_eq!(parsed["result"]["levels"][1].as_f64(), Some(2.5));
        assert!(parsed["result"]["nested"]["x"].is_null());
        assert!(text.contains("\"N\": 4000"));
        let csv = doc.render(Format::Csv);
        assert!(csv.contains("levels.1,2.5000000000000000e0"));
        assert!(csv.starts_with("# schema_version: 1\n"));
    }
}
