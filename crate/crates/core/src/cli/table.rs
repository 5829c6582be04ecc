//! CSV emission: header row, LF line endings, shortest round-trip decimals.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;

/// One estimated quantity with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub quantity: String,
    pub estimate: f64,
    pub std_error: f64,
    pub particles: usize,
    pub steps: usize,
    pub seed: u64,
    pub config_hash: String,
    /// Seconds; written to a separate timings file so that result files stay
    /// byte-reproducible.
    #[serde(skip)]
    pub wall_time: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn find(&self, quantity: &str) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.quantity == quantity)
    }

    /// Writes `<stem>.csv` and `<stem>_timings.csv`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        let main = dir.join(format!("{stem}.csv"));
        let mut w = writer(&main)?;
        if self.rows.is_empty() {
            w.write_record(["quantity", "estimate", "std_error", "particles", "steps", "seed", "config_hash"])?;
        }
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        let timings = dir.join(format!("{stem}_timings.csv"));
        let mut t = writer(&timings)?;
        t.write_record(["quantity", "wall_time_s"])?;
        for row in &self.rows {
            t.write_record([row.quantity.clone(), row.wall_time.to_string()])?;
        }
        t.flush()?;
        Ok(vec![main, timings])
    }
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?)
}

/// Writes a plain table with the given header.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
    let mut w = writer(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(path.to_path_buf())
}

/// Shortest decimal that round-trips to the same `f64`.
pub fn num(v: f64) -> String {
    v.to_string()
}
