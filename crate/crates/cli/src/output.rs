//! CSV and JSON-lines writers with a provenance header.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde_json::{json, Map, Value};

use crate::config::Format;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) if *x == 0.0 || (1e-4..1e15).contains(&x.abs()) => x.to_string(),
            Cell::Float(x) => format!("{x:e}"),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Float(x) if x.is_finite() => json!(x),
            Cell::Float(x) => json!(x.to_string()),
            Cell::Bool(b) => json!(b),
            Cell::Text(s) => json!(s),
        }
    }
}

/// Experiment result: a table plus scalar summary values.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: Vec<(&'static str, Cell)>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table { columns: columns.to_vec(), rows: Vec::new(), summary: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &'static str, value: impl Into<Cell>) {
        self.summary.push((key, value.into()));
    }
}

pub struct Provenance<'a> {
    pub experiment: &'a str,
    pub params: &'a BTreeMap<String, String>,
    pub seed: Option<u64>,
}

pub fn version() -> String {
    format!("lopsim {}", env!("CARGO_PKG_VERSION"))
}

pub fn write<W: Write>(w: &mut W, prov: &Provenance<'_>, table: &Table, format: Format) -> io::Result<()> {
    match format {
        Format::Csv => write_csv(w, prov, table),
        Format::Jsonl => write_jsonl(w, prov, table),
    }
}

fn write_csv<W: Write>(w: &mut W, prov: &Provenance<'_>, table: &Table) -> io::Result<()> {
    let params: Vec<String> = prov.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
    writeln!(w, "# experiment: {}", prov.experiment)?;
    writeln!(w, "# params: {}", params.join(" "))?;
    writeln!(w, "# seed: {}", prov.seed.map_or("none".to_string(), |s| s.to_string()))?;
    writeln!(w, "# version: {}", version())?;
    writeln!(w, "{}", table.columns.join(","))?;
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(Cell::csv).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    for (k, v) in &table.summary {
        writeln!(w, "# summary: {k}={}", v.csv())?;
    }
    Ok(())
}

fn write_jsonl<W: Write>(w: &mut W, prov: &Provenance<'_>, table: &Table) -> io::Result<()> {
    let header = json!({
        "provenance": {
            "experiment": prov.experiment,
            "params": prov.params,
            "seed": prov.seed,
            "version": version(),
            "columns": table.columns,
        }
    });
    writeln!(w, "{header}")?;
    for row in &table.rows {
        let obj: Map<String, Value> = table.columns.iter().zip(row).map(|(k, v)| (k.to_string(), v.json())).collect();
        writeln!(w, "{}", Value::Object(obj))?;
    }
    if !table.summary.is_empty() {
        let obj: Map<String, Value> = table.summary.iter().map(|(k, v)| (k.to_string(), v.json())).collect();
        writeln!(w, "{}", json!({ "summary": obj }))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new(&["n", "p", "label"]);
        t.push(vec![2usize.into(), 0.25.into(), "a,b".into()]);
        t.note("total", 0.25);
        t
    }

    #[test]
    fn csv_layout() {
        let params = BTreeMap::from([("n_max".to_string(), "3".to_string())]);
        let prov = Provenance { experiment: "x", params: &params, seed: Some(4) };
        let mut buf = Vec::new();
        write(&mut buf, &prov, &sample(), Format::Csv).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# experiment: x");
        assert_eq!(lines[1], "# params: n_max=3");
        assert_eq!(lines[2], "# seed: 4");
        assert_eq!(lines[4], "n,p,label");
        assert_eq!(lines[5], "2,0.25,\"a,b\"");
        assert_eq!(lines[6], "# summary: total=0.25");
    }

    #[test]
    fn jsonl_layout() {
        let params = BTreeMap::new();
        let prov = Provenance { experiment: "x", params: &params, seed: None };
        let mut buf = Vec::new();
        write(&mut buf, &prov, &sample(), Format::Jsonl).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(rows[0]["provenance"]["experiment"], "x");
        assert!(rows[0]["provenance"]["seed"].is_null());
        assert_eq!(rows[1]["p"], 0.25);
        assert_eq!(rows[2]["summary"]["total"], 0.25);
    }
}
