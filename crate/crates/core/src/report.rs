//! Report output: CSV tables (header row, comma, `.` decimal) and a summary
//! with one JSON object per line.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

/// One summary line. Absent fields serialize as `null`, so every line
/// carries the same key set.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SummaryRecord {
    pub system: String,
    pub phi: String,
    pub alpha: Option<f64>,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub n: Option<usize>,
    pub count: Option<String>,
    pub rate: Option<f64>,
    pub ratio: Option<f64>,
    pub flags: Vec<String>,
    pub module: String,
    pub certificate: String,
    pub residual: Option<f64>,
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json_lines<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| Error::Io(e.to_string()))?;
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

/// Writes named tables into one output directory.
#[derive(Debug, Clone)]
pub struct ReportDir {
    root: PathBuf,
}

impl ReportDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(ReportDir { root })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn csv<T: Serialize>(&self, name: &str, rows: &[T]) -> Result<PathBuf> {
        let p = self.path(name);
        write_csv(&p, rows)?;
        Ok(p)
    }

    pub fn summary(&self, name: &str, records: &[SummaryRecord]) -> Result<PathBuf> {
        let p = self.path(name);
        write_json_lines(&p, records)?;
        Ok(p)
    }

    pub fn text(&self, name: &str, body: &str) -> Result<PathBuf> {
        let p = self.path(name);
        fs::write(&p, body)?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        m: usize,
        eps: f64,
        count: String,
    }

    fn scratch(name: &str) -> PathBuf {
        let p = std::env::temp_dir().join(format!("levelscale-report-{name}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&p);
        p
    }

    #[test]
    fn csv_has_header_and_dot_decimals() {
        let dir = ReportDir::create(scratch("csv")).unwrap();
        let p = dir
            .csv("t.csv", &[Row { m: 2, eps: 0.25, count: "6".into() }, Row { m: 3, eps: 1e-3, count: "10".into() }])
            .unwrap();
        let text = fs::read_to_string(p).unwrap();
        assert_eq!(text, "m,eps,count\n2,0.25,6\n3,0.001,10\n");
        fs::remove_dir_all(dir.root()).unwrap();
    }

    #[test]
    fn summary_lines_share_keys() {
        let dir = ReportDir::create(scratch("json")).unwrap();
        let full = SummaryRecord {
            system: "grid(m=2)".into(),
            phi: "first-coordinate".into(),
            alpha: Some(0.5),
            rate: Some(0.69),
            flags: vec!["interior".into()],
            ..Default::default()
        };
        let p = dir.summary("s.jsonl", &[full, SummaryRecord::default()]).unwrap();
        let text = fs::read_to_string(p).unwrap();
        let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines.len(), 2);
        for key in ["system", "phi", "alpha", "epsilon", "delta", "n", "count", "rate", "ratio", "flags"] {
            assert!(lines.iter().all(|l| l.get(key).is_some()), "{key}");
        }
        assert_eq!(lines[0]["alpha"], 0.5);
        assert!(lines[1]["alpha"].is_null());
        fs::remove_dir_all(dir.root()).unwrap();
    }
}
