use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use log::info;
use serde::Serialize;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    AtMost,
    AtLeast,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub bound: Bound,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            bound: Bound::AtMost,
            passed: value <= tolerance,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            bound: Bound::AtLeast,
            passed: value >= tolerance,
        }
    }
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    schema_version: u32,
    command: &'a str,
    config_hash: &'a str,
    passed: bool,
    checks: &'a [Check],
    data: &'a T,
}

#[derive(Serialize)]
struct Metadata<'a> {
    schema_version: u32,
    command: &'a str,
    config_hash: &'a str,
    unix_time: u64,
    elapsed_seconds: f64,
    workers: usize,
    version: &'static str,
    files: &'a [String],
}

/// Output directory of one subcommand run.
pub struct Output {
    dir: PathBuf,
    command: &'static str,
    config_hash: String,
    files: Vec<String>,
}

impl Output {
    pub fn new(dir: &Path, command: &'static str, config_hash: String) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command,
            config_hash,
            files: Vec::new(),
        })
    }

    pub fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        info!("wrote {}", path.display());
        Ok(())
    }

    /// `name` as a JSON report carrying the checks and the config hash.
    pub fn report<T: Serialize>(&mut self, name: &str, checks: &[Check], data: &T) -> Result<()> {
        let report = Report {
            schema_version: REPORT_SCHEMA_VERSION,
            command: self.command,
            config_hash: &self.config_hash,
            passed: checks.iter().all(|c| c.passed),
            checks,
            data,
        };
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, data: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(data)?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    pub fn json_text(&mut self, name: &str, text: &str) -> Result<()> {
        self.write_bytes(name, text.as_bytes())
    }

    /// CSV with a leading `# config_hash=...` comment line.
    pub fn csv<R: Serialize>(&mut self, name: &str, rows: &[R]) -> Result<()> {
        let path = self.path(name);
        let mut file = BufWriter::new(File::create(&path)?);
        writeln!(file, "# config_hash={}", self.config_hash)?;
        let mut w = csv::Writer::from_writer(file);
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        info!("wrote {}", path.display());
        Ok(())
    }

    pub fn finish(mut self, elapsed_seconds: f64) -> Result<()> {
        let unix_time = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let files = std::mem::take(&mut self.files);
        let hash = self.config_hash.clone();
        let meta = Metadata {
            schema_version: REPORT_SCHEMA_VERSION,
            command: self.command,
            config_hash: &hash,
            unix_time,
            elapsed_seconds,
            workers: rayon::current_num_threads(),
            version: env!("CARGO_PKG_VERSION"),
            files: &files,
        };
        self.json("metadata.json", &meta)
    }
}

pub fn print_checks(checks: &[Check]) {
    for c in checks {
        let op = match c.bound {
            Bound::AtMost => "<=",
            Bound::AtLeast => ">=",
        };
        println!(
            "{} {:<32} {:.3e} {op} {:.1e}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.tolerance
        );
    }
}
