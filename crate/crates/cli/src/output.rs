//! Row output in CSV or JSON Lines, to a file or stdout.

use std::fs::{File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use clap::ValueEnum;
use serde_json::{Map, Number, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// A cell: CSV prints it as text, JSON as a number or string.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => Value::from(*v),
            Cell::Float(v) => Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Bool(b) => Value::from(*b),
        }
    }
}

pub type Row = Vec<(String, Cell)>;

/// Streams rows. CSV writes the header before the first row unless the
/// target already holds rows being appended to.
pub struct RowWriter {
    format: Format,
    out: Box<dyn Write>,
    csv: Option<csv::Writer<Box<dyn Write>>>,
    header_pending: bool,
}

impl RowWriter {
    /// `append` keeps existing file content and suppresses the CSV header
    /// when the file is nonempty.
    pub fn open(path: Option<&Path>, format: Format, append: bool) -> io::Result<Self> {
        let (sink, has_content): (Box<dyn Write>, bool) = match path {
            None => (Box::new(io::stdout()), false),
            Some(p) => {
                let has_content = append && p.metadata().map(|m| m.len() > 0).unwrap_or(false);
                let f: File = if append {
                    OpenOptions::new().create(true).append(true).open(p)?
                } else {
                    File::create(p)?
                };
                (Box::new(BufWriter::new(f)), has_content)
            }
        };
        let header_pending = !has_content;
        Ok(match format {
            Format::Csv => RowWriter {
                format,
                out: Box::new(io::sink()),
                csv: Some(csv::WriterBuilder::new().has_headers(false).from_writer(sink)),
                header_pending,
            },
            Format::Json => RowWriter {
                format,
                out: sink,
                csv: None,
                header_pending,
            },
        })
    }

    pub fn write(&mut self, row: &Row) -> io::Result<()> {
        match self.format {
            Format::Csv => {
                let w = self.csv.as_mut().expect("csv writer");
                if self.header_pending {
                    w.write_record(row.iter().map(|(k, _)| k.as_str()))?;
                    self.header_pending = false;
                }
                w.write_record(row.iter().map(|(_, v)| v.csv()))?;
                w.flush()
            }
            Format::Json => {
                let obj: Map<String, Value> = row.iter().map(|(k, v)| (k.clone(), v.json())).collect();
                serde_json::to_writer(&mut self.out, &obj)?;
                self.out.write_all(b"\n")?;
                self.out.flush()
            }
        }
    }
}
