//! Run records and file output. CSV files carry their column list in a single
//! leading comment line `# a,b,c`; numbers use Rust's shortest round-trip
//! formatting, so reading a file back reproduces every value bit for bit.

use crate::config::RunConfig;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Content hash with a git-style header: sha256("<kind> <len>\0<bytes>").
pub fn content_hash(kind: &str, bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("{kind} {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    /// The measured quantity that was compared against `tolerance`.
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Verdict {
    pub fn new(name: &str, passed: bool, value: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self { name: name.to_string(), passed, value, tolerance, detail: detail.into() }
    }

    /// `value <= tolerance`, with NaN counted as a failure.
    pub fn below(name: &str, value: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self::new(name, value <= tolerance, value, tolerance, detail)
    }

    pub fn line(&self) -> String {
        format!(
            "{} {:<28} value {:<12.4e} tol {:<10.3e} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.tolerance,
            self.detail
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub name: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub version: String,
    pub config: RunConfig,
    pub config_hash: String,
    pub outputs: serde_json::Value,
    pub verdicts: Vec<Verdict>,
    /// Files written, relative to the output directory.
    pub files: Vec<String>,
    /// Wall-clock times; excluded from the record hash.
    pub timing: Vec<Timing>,
}

impl RunRecord {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            config_hash: content_hash("config", config.canonical_json().as_bytes()),
            outputs: serde_json::Value::Null,
            verdicts: Vec::new(),
            files: Vec::new(),
            timing: Vec::new(),
        }
    }

    pub fn all_passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    /// Hash of everything except the timing block.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("record serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timing");
        }
        content_hash("record", serde_json::to_string(&v).expect("JSON renders").as_bytes())
    }

    pub fn to_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("record serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.insert("record_hash".into(), serde_json::Value::String(self.hash()));
        }
        serde_json::to_string_pretty(&v).expect("JSON renders")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut v: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Io(e.to_string()))?;
        if let Some(obj) = v.as_object_mut() {
            obj.remove("record_hash");
        }
        serde_json::from_value(v).map_err(|e| Error::Io(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = format!("# {}\n", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().and_then(|l| l.strip_prefix("# ")).ok_or_else(|| Error::Io("missing '# ' column header".into()))?;
        let columns: Vec<String> = header.split(',').map(str::to_string).collect();
        let rows = lines
            .filter(|l| !l.is_empty())
            .map(|l| {
                let row = l
                    .split(',')
                    .map(|c| c.parse::<f64>().map_err(|e| Error::Io(format!("bad number {c:?}: {e}"))))
                    .collect::<Result<Vec<_>>>()?;
                if row.len() != columns.len() {
                    return Err(Error::Io(format!("row has {} cells, header {}", row.len(), columns.len())));
                }
                Ok(row)
            })
            .collect::<Result<_>>()?;
        Ok(Self { columns, rows })
    }
}

/// Writes files below an optional output directory and remembers their names.
#[derive(Debug, Default)]
pub struct OutputSink {
    dir: Option<PathBuf>,
    pub written: Vec<String>,
}

impl OutputSink {
    pub fn new(dir: Option<&Path>) -> Result<Self> {
        if let Some(d) = dir {
            std::fs::create_dir_all(d)?;
        }
        Ok(Self { dir: dir.map(Path::to_path_buf), written: Vec::new() })
    }

    pub fn none() -> Self {
        Self::default()
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        if let Some(d) = &self.dir {
            std::fs::write(d.join(name), contents)?;
            self.written.push(name.to_string());
        }
        Ok(())
    }

    pub fn csv(&mut self, name: &str, table: &CsvTable) -> Result<()> {
        self.write(name, &table.render())
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let mut t = CsvTable::new(&["t", "x", "value"]);
        t.push(vec![0.0, -1.5e-300, std::f64::consts::PI]);
        t.push(vec![1.0 / 3.0, 1e22, -0.1]);
        let back = CsvTable::parse(&t.render()).unwrap();
        assert_eq!(back, t);
        assert!(t.render().starts_with("# t,x,value\n"));
        assert!(CsvTable::parse("1,2\n").is_err());
    }

    #[test]
    fn record_hash_ignores_timing() {
        let cfg = RunConfig::default();
        let mut a = RunRecord::new("rate", &cfg);
        a.outputs = serde_json::json!({"b2": 1.25e-7, "b1": 0.0});
        let mut b = a.clone();
        b.timing.push(Timing { name: "total".into(), seconds: 3.0 });
        assert_eq!(a.hash(), b.hash());
        b.outputs = serde_json::json!({"b2": 1.2500000000000002e-7, "b1": 0.0});
        assert_ne!(a.hash(), b.hash());
        let back = RunRecord::from_json(&a.to_json()).unwrap();
        assert_eq!(back, a);
        assert_eq!(back.hash(), a.hash());
    }
}
