//! CSV and manifest writers.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

/// A CSV cell. Floats are written with ten significant digits.
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::I(v as i64)
    }
}

impl From<i32> for Cell {
    fn from(v: i32) -> Self {
        Cell::I(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(v) if *v == 0.0 => "0".into(),
            Cell::F(v) => format!("{v:.9e}"),
            Cell::I(v) => v.to_string(),
            Cell::S(s) => s.clone(),
        }
    }
}

#[macro_export]
macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$($crate::output::Cell::from($x)),*] };
}

pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.iter().map(Cell::render).collect::<Vec<_>>().join(","));
            s.push('\n');
        }
        s
    }
}

/// Collects the files of one run and writes them together with the manifest.
pub struct Run {
    dir: PathBuf,
    command: &'static str,
    flags: Value,
    seed: Option<u64>,
    outputs: Vec<String>,
    notes: Vec<String>,
}

impl Run {
    pub fn new<T: Serialize>(dir: &Path, command: &'static str, flags: &T, seed: Option<u64>) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command,
            flags: serde_json::to_value(flags)?,
            seed,
            outputs: Vec::new(),
            notes: Vec::new(),
        })
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn write_table(&mut self, name: &str, table: &Table) -> Result<()> {
        self.write_bytes(name, table.render().as_bytes())
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        let mut f = fs::File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
        f.write_all(bytes)?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    pub fn finish(self) -> Result<()> {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let manifest = json!({
            "command": self.command,
            "flags": self.flags,
            "seed": self.seed,
            "outputs": self.outputs,
            "version": env!("CARGO_PKG_VERSION"),
            "timestamp_unix": timestamp,
            "notes": self.notes,
        });
        let path = self.dir.join(format!("{}_manifest.json", self.command));
        fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
            .with_context(|| format!("cannot write {}", path.display()))
    }
}
