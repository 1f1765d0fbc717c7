use std::io::Write;

use crate::error::Result;

/// Rows of a CSV table whose first column is the config hash.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    hash: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(hash: &str, header: &[&str]) -> Self {
        let mut full = vec!["config_hash".to_string()];
        full.extend(header.iter().map(|h| h.to_string()));
        Self {
            hash: hash.to_string(),
            header: full,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len() + 1, self.header.len());
        let mut row = Vec::with_capacity(self.header.len());
        row.push(self.hash.clone());
        row.extend(cells);
        self.rows.push(row);
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn opt_float(v: Option<f64>) -> String {
    v.map(float).unwrap_or_default()
}
