//! Tabular output: CSV with `#`-prefixed metadata lines, or JSON
//! `{"meta": {...}, "rows": [{...}, ...]}`. Floats are written with 17
//! significant digits so that parsing recovers them exactly.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde_json::{Map, Number, Value};

use crate::args::Format;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Null,
}

impl Cell {
    /// `Null` for non-finite values.
    pub fn num(x: f64) -> Self {
        if x.is_finite() {
            Cell::Num(x)
        } else {
            Cell::Null
        }
    }

    pub fn opt(x: Option<f64>) -> Self {
        x.map_or(Cell::Null, Cell::num)
    }

    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => format_float(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Null => "null".to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => Value::Number(Number::from_str(&format_float(*x)).expect("finite float")),
            Cell::Int(i) => Value::from(*i),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Null => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::num(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { meta: Vec::new(), columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.to_string(), value.to_string()));
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (k, v) in &self.meta {
            writeln!(out, "# {k}: {}", v.replace('\n', " "))?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv))?;
        }
        w.flush()
    }

    pub fn to_json(&self) -> Value {
        let meta: Map<String, Value> = self.meta.iter().map(|(k, v)| (k.clone(), Value::from(v.as_str()))).collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> =
                    self.columns.iter().zip(row).map(|(c, cell)| (c.to_string(), cell.json())).collect();
                Value::Object(obj)
            })
            .collect();
        let mut top = Map::new();
        top.insert("meta".into(), Value::Object(meta));
        top.insert("rows".into(), Value::Array(rows));
        Value::Object(top)
    }

    pub fn write(&self, format: Format, path: Option<&Path>) -> io::Result<()> {
        let sink: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        };
        match format {
            Format::Csv => self.write_csv(sink),
            Format::Json => {
                let mut sink = sink;
                serde_json::to_writer_pretty(&mut sink, &self.to_json())?;
                writeln!(sink)?;
                sink.flush()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_through_text() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, f64::MAX] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn non_finite_becomes_null() {
        assert_eq!(Cell::num(f64::NAN), Cell::Null);
        assert_eq!(Cell::num(f64::INFINITY), Cell::Null);
    }

    #[test]
    fn json_keeps_seventeen_digits() {
        let mut t = Table::new(&["x"]);
        t.push(vec![Cell::num(0.1)]);
        let text = serde_json::to_string(&t.to_json()).unwrap();
        assert!(text.contains("1.0000000000000001e-1"), "{text}");
    }

    #[test]
    fn csv_has_metadata_header() {
        let mut t = Table::new(&["a", "b"]);
        t.meta("seed", 7);
        t.push(vec![Cell::Int(1), Cell::Null]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "# seed: 7\na,b\n1,null\n");
    }
}
