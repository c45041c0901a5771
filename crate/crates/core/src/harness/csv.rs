//! Schema-checked CSV tables and atomic file output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const CURVES_HEADER: &[&str] = &["step", "estimator", "seed", "estimate_bits"];
pub const SUMMARY_HEADER: &[&str] = &[
    "estimator",
    "true_mi_bits",
    "mean_bias_bits",
    "variance_bits2",
    "seeds",
];
pub const CONSTELLATION_HEADER: &[&str] = &["message", "x0", "x1"];
pub const BLER_HEADER: &[&str] = &["ebno_db", "bler", "trials", "seed"];
pub const PARTITION_HEADER: &[&str] = &[
    "estimator",
    "seed",
    "reruns",
    "partition_mean",
    "partition_variance",
    "variance_bound",
];
pub const LEMMA_HEADER: &[&str] = &[
    "set",
    "family",
    "b",
    "a",
    "bound_nats",
    "log_mean_nats",
    "violation",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Int,
    Real,
    Text,
}

/// Column types for the known headers; unknown headers get no type check.
fn schema(header: &[&str]) -> Option<Vec<ColumnKind>> {
    use ColumnKind::*;
    let kinds: &[ColumnKind] = match header {
        h if h == CURVES_HEADER => &[Int, Text, Int, Real],
        h if h == SUMMARY_HEADER => &[Text, Real, Real, Real, Int],
        h if h == CONSTELLATION_HEADER => &[Int, Real, Real],
        h if h == BLER_HEADER => &[Real, Real, Int, Int],
        h if h == PARTITION_HEADER => &[Text, Int, Int, Real, Real, Real],
        h if h == LEMMA_HEADER => &[Int, Text, Real, Real, Real, Real, Int],
        _ => return None,
    };
    Some(kinds.to_vec())
}

/// A header plus rows of already formatted cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        CsvTable {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Checks row widths, forbidden characters and, for the known schemas,
    /// that every cell parses as its column type.
    pub fn validate(&self) -> Result<()> {
        let header: Vec<&str> = self.header.iter().map(String::as_str).collect();
        let kinds = schema(&header);
        for (r, row) in self.rows.iter().enumerate() {
            if row.len() != self.header.len() {
                return Err(Error::numeric(format!(
                    "csv row {r} has {} cells, header has {}",
                    row.len(),
                    self.header.len()
                )));
            }
            for (c, cell) in row.iter().enumerate() {
                if cell.is_empty() || cell.contains([',', '\n', '\r', '"']) {
                    return Err(Error::numeric(format!(
                        "csv row {r} column {}: bad cell `{cell}`",
                        self.header[c]
                    )));
                }
                let ok = match kinds.as_ref().map(|k| k[c]) {
                    Some(ColumnKind::Int) => cell.parse::<i64>().is_ok(),
                    Some(ColumnKind::Real) => cell.parse::<f64>().is_ok_and(f64::is_finite),
                    _ => true,
                };
                if !ok {
                    return Err(Error::numeric(format!(
                        "csv row {r} column {}: `{cell}` does not match the schema",
                        self.header[c]
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Validates, then writes through a temporary file in the same
    /// directory and renames it into place.
    pub fn write_atomic(&self, path: &Path) -> Result<()> {
        self.validate()?;
        write_atomic(path, self.to_csv_string().as_bytes())
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_real(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::config(format!("{} is not a file path", path.display())))?;
    let tmp: PathBuf = dir.join(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}
