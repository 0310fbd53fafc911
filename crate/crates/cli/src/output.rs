//! Atomically written CSV tables and reports.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// The comment line carried by every CSV file.
pub fn provenance(config_hash: &str) -> String {
    format!("platoon {VERSION} config-sha256 {config_hash}")
}

/// A CSV cell: numbers get 17 significant digits.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(usize),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        CsvTable {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self, comment: &str) -> String {
        let mut s = format!("# {comment}\n{}\n", self.header.join(","));
        for row in &self.rows {
            for (i, c) in row.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                match c {
                    Cell::Num(v) => write!(s, "{v:.16e}"),
                    Cell::Int(v) => write!(s, "{v}"),
                    Cell::Bool(v) => write!(s, "{v}"),
                }
                .expect("writing to a String");
            }
            s.push('\n');
        }
        s
    }
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.error.to_string()))?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Toml,
    Json,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Toml => "toml",
            ReportFormat::Json => "json",
        }
    }

    pub fn render<T: Serialize>(self, report: &T) -> Result<String, CliError> {
        match self {
            ReportFormat::Json => serde_json::to_string_pretty(report)
                .map(|s| s + "\n")
                .map_err(|e| CliError::Numeric(format!("report: {e}"))),
            ReportFormat::Toml => toml::to_string(report).map_err(|e| CliError::Numeric(format!("report: {e}"))),
        }
    }
}

/// Output directory plus report format.
#[derive(Clone, Debug)]
pub struct Sink {
    pub dir: PathBuf,
    pub format: ReportFormat,
}

impl Sink {
    pub fn csv(&self, name: &str, table: &CsvTable, comment: &str) -> Result<PathBuf, CliError> {
        let p = self.dir.join(name);
        write_atomic(&p, table.render(comment).as_bytes())?;
        Ok(p)
    }

    pub fn report<T: Serialize>(&self, stem: &str, report: &T) -> Result<(PathBuf, String), CliError> {
        let text = self.format.render(report)?;
        let p = self.dir.join(format!("{stem}.{}", self.format.extension()));
        write_atomic(&p, text.as_bytes())?;
        Ok((p, text))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = CsvTable::new(&["n", "gain", "pass"]);
        t.push(vec![4usize.into(), 0.1.into(), false.into()]);
        let s = t.render("platoon 0 config-sha256 00");
        assert_eq!(
            s,
            "# platoon 0 config-sha256 00\nn,gain,pass\n4,1.0000000000000001e-1,false\n"
        );
        assert!(!s.contains('\r'));
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
