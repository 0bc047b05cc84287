use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// A CSV table with a fixed header; cells are preformatted strings.
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}

/// Where a run writes its artifacts; remembers every file written.
pub struct Output {
    dir: PathBuf,
    stem: String,
    written: Vec<PathBuf>,
}

impl Output {
    pub fn new(dir: &Path, stem: &str) -> Result<Self> {
        fs::create_dir_all(dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_owned(),
            stem: stem.to_owned(),
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: String, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
        self.written.push(path);
        Ok(())
    }

    /// `<stem>.csv`, or `<stem>_<suffix>.csv` when a suffix is given.
    pub fn csv(&mut self, suffix: Option<&str>, table: &Table) -> Result<()> {
        let name = match suffix {
            Some(s) => format!("{}_{s}.csv", self.stem),
            None => format!("{}.csv", self.stem),
        };
        self.write(name, &table.render())
    }

    pub fn json<T: Serialize>(&mut self, suffix: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(format!("{}_{suffix}.json", self.stem), &text)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

/// The machine-readable summary shared by all scans and sweeps.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub sweep: String,
    pub params: Value,
    pub sup_ratio: f64,
    pub stable: bool,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub details: Value,
}
