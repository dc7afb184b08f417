//! Check reports and their CSV/JSON serialization.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

use crate::config::Format;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().context("flushing CSV")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub check: String,
    pub params: Value,
    pub ok: bool,
    pub witnesses: Vec<Value>,
    /// Scalar results, keyed by name.
    pub summary: serde_json::Map<String, Value>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub tables: Vec<Table>,
}

impl Report {
    pub fn new(check: &str, params: Value) -> Self {
        Self { check: check.into(), params, ok: true, witnesses: Vec::new(), summary: Default::default(), tables: Vec::new() }
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.into(), value.into());
    }

    /// Records a sub-check; the report fails if any sub-check fails.
    pub fn require(&mut self, key: &str, pass: bool) {
        self.set(key, pass);
        self.ok &= pass;
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    fn json_without_tables(&self) -> Result<String> {
        let slim = Report { tables: Vec::new(), ..self.clone() };
        Ok(serde_json::to_string_pretty(&slim)? + "\n")
    }

    /// `csv`: `report.json` plus one `<table>.csv` per table. `json`: a single
    /// `report.json` with tables inline.
    pub fn write_dir(&self, dir: &Path, format: Format) -> Result<Vec<String>> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut written = Vec::new();
        match format {
            Format::Json => {
                fs::write(dir.join("report.json"), serde_json::to_string_pretty(self)? + "\n")?;
                written.push("report.json".to_string());
            }
            Format::Csv => {
                fs::write(dir.join("report.json"), self.json_without_tables()?)?;
                written.push("report.json".to_string());
                for t in &self.tables {
                    let name = format!("{}.csv", t.name);
                    fs::write(dir.join(&name), t.to_csv()?)?;
                    written.push(name);
                }
            }
        }
        Ok(written)
    }

    /// Stdout form: CSV tables under `# name` headers, then the report JSON.
    pub fn write_stdout(&self, format: Format, out: &mut impl Write) -> Result<()> {
        match format {
            Format::Json => out.write_all((serde_json::to_string_pretty(self)? + "\n").as_bytes())?,
            Format::Csv => {
                for t in &self.tables {
                    writeln!(out, "# {}", t.name)?;
                    out.write_all(&t.to_csv()?)?;
                    writeln!(out)?;
                }
                writeln!(out, "# report")?;
                out.write_all(self.json_without_tables()?.as_bytes())?;
            }
        }
        Ok(())
    }
}
