//! Report files: `report.json`, one CSV per table and `summary.txt`, each written atomically.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

/// Outcome of one predicted-vs-observed comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
  pub name: String,
  pub passed: bool,
  pub detail: String,
}

impl CheckResult {
  pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
    Self { name: name.into(), passed, detail: detail.into() }
  }
}

/// A numeric table written as `<name>.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
  pub name: String,
  pub header: Vec<String>,
  pub rows: Vec<Vec<f64>>,
}

impl Table {
  pub fn new(name: &str, header: &[&str]) -> Self {
    Self { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
  }

  pub fn push(&mut self, row: Vec<f64>) {
    debug_assert_eq!(row.len(), self.header.len());
    self.rows.push(row);
  }

  /// Comma-separated, 17 significant digits, `inf`/`-inf`/`nan` spelled out.
  pub fn to_csv(&self) -> String {
    let mut out = self.header.join(",");
    out.push('\n');
    for row in &self.rows {
      let cells: Vec<String> = row.iter().map(|&v| format_float(v)).collect();
      out.push_str(&cells.join(","));
      out.push('\n');
    }
    out
  }
}

pub fn format_float(v: f64) -> String {
  if v.is_nan() {
    "nan".into()
  } else if v.is_infinite() {
    if v > 0.0 { "inf" } else { "-inf" }.into()
  } else {
    format!("{v:.16e}")
  }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
  Pass,
  CheckFailed,
  EssFlagged,
  Error,
}

impl Status {
  pub fn exit_code(self) -> u8 {
    match self {
      Status::Pass => 0,
      Status::CheckFailed => 1,
      Status::EssFlagged => 3,
      Status::Error => 4,
    }
  }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
  pub tool: String,
  pub version: String,
  /// SHA-256 of the canonical form of the effective config.
  pub config_hash: String,
  pub kind: String,
  pub seed: u64,
  pub status: Status,
  pub checks: Vec<CheckResult>,
  pub ess_flagged: bool,
  pub warnings: Vec<String>,
  pub error: Option<String>,
  pub results: serde_json::Value,
  pub config: ExperimentConfig,
  #[serde(skip)]
  pub tables: Vec<Table>,
  #[serde(skip)]
  pub summary: Vec<String>,
}

pub fn config_hash(config: &ExperimentConfig) -> String {
  Sha256::digest(config.to_toml().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

impl Report {
  pub fn new(config: &ExperimentConfig) -> Self {
    Self {
      tool: "expcli".into(),
      version: env!("CARGO_PKG_VERSION").into(),
      config_hash: config_hash(config),
      kind: config.kind().name().into(),
      seed: config.seed(),
      status: Status::Pass,
      checks: Vec::new(),
      ess_flagged: false,
      warnings: Vec::new(),
      error: None,
      results: serde_json::Value::Null,
      config: config.clone(),
      tables: Vec::new(),
      summary: Vec::new(),
    }
  }

  pub fn check(&mut self, c: CheckResult) {
    self.checks.push(c);
  }

  /// Sets the status from the checks and flags; an error takes precedence, then ESS.
  pub fn finish(&mut self) {
    self.status = if self.error.is_some() {
      Status::Error
    } else if self.ess_flagged {
      Status::EssFlagged
    } else if self.checks.iter().any(|c| !c.passed) {
      Status::CheckFailed
    } else {
      Status::Pass
    };
  }

  pub fn to_json(&self) -> String {
    let mut s = serde_json::to_string_pretty(self).expect("report serialises");
    s.push('\n');
    s
  }

  pub fn summary_text(&self) -> String {
    let mut out = format!(
      "expcli {} | kind {} | seed {} | config {}\nstatus: {:?} (exit {})\n",
      self.version,
      self.kind,
      self.seed,
      &self.config_hash[..16],
      self.status,
      self.status.exit_code()
    );
    if let Some(e) = &self.error {
      out.push_str(&format!("error: {e}\n"));
    }
    for line in &self.summary {
      out.push_str(line);
      out.push('\n');
    }
    for c in &self.checks {
      out.push_str(&format!("{} {}: {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail));
    }
    if self.ess_flagged {
      out.push_str("WARNING effective sample size below threshold; estimates flagged\n");
    }
    for w in &self.warnings {
      out.push_str(&format!("warning: {w}\n"));
    }
    out
  }

  /// Writes every file into `dir`, returning their paths.
  pub fn write(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = vec![write_atomic(dir, "report.json", &self.to_json())?];
    for t in &self.tables {
      written.push(write_atomic(dir, &format!("{}.csv", t.name), &t.to_csv())?);
    }
    written.push(write_atomic(dir, "summary.txt", &self.summary_text())?);
    Ok(written)
  }
}

/// Writes to a temporary file in `dir` and renames it into place.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> std::io::Result<PathBuf> {
  let target = dir.join(name);
  let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
  {
    let mut f = fs::File::create(&tmp)?;
    f.write_all(contents.as_bytes())?;
    f.sync_all()?;
  }
  fs::rename(&tmp, &target)?;
  Ok(target)
}

#[cfg(test)]
mod tests {
  use super::*;

  #[test]
  fn csv_uses_seventeen_significant_digits() {
    let mut t = Table::new("x", &["a", "b"]);
    t.push(vec![0.1, f64::INFINITY]);
    let csv = t.to_csv();
    assert_eq!(csv, "a,b\n1.0000000000000001e-1,inf\n");
    let back: f64 = csv.lines().nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
    assert_eq!(back, 0.1);
  }

  #[test]
  fn atomic_write_leaves_no_temp_file() {
    let dir = std::env::temp_dir().join(format!("expcli-report-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    write_atomic(&dir, "a.txt", "one").unwrap();
    write_atomic(&dir, "a.txt", "two").unwrap();
    assert_eq!(fs::read_to_string(dir.join("a.txt")).unwrap(), "two");
    assert_eq!(fs::read_dir(&dir).unwrap().count(), 1);
    fs::remove_dir_all(&dir).unwrap();
  }
}
