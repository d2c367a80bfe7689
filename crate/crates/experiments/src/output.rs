//! File emission: CSV tables, JSON reports and the run manifest.
//!
//! CSV floats use `{:.16e}` (17 significant digits), which round-trips every
//! `f64` exactly and is byte-stable across runs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::AppError;

pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> AppError {
    AppError::Io(format!("{}: {e}", path.display()))
}

/// Writes a header row followed by `rows`. An empty `rows` gives a
/// header-only file.
pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<(), AppError> {
    let mut w =
        csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Reads a CSV written by [`write_csv`] back as a header and string rows.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), AppError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let header = r.headers().map_err(|e| io_err(path, e))?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), AppError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), AppError> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String, AppError> {
    Ok(sha256_hex(&fs::read(path).map_err(|e| io_err(path, e))?))
}

/// File-name-safe form of a sweep label (`eta=0.005` → `eta_0.005`).
pub fn slug(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect()
}

/// Output directory plus the list of files written so far.
#[derive(Debug)]
pub struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, AppError> {
        fs::create_dir_all(root).map_err(|e| io_err(root, e))?;
        Ok(Self { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Full path for `name`, remembered for the manifest.
    pub fn file(&mut self, name: &str) -> PathBuf {
        if !self.written.iter().any(|w| w == name) {
            self.written.push(name.to_string());
        }
        self.root.join(name)
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub config_sha256: String,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub horizon: Option<usize>,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: BTreeMap<String, String>,
}

/// Checksums every file written into `out` and writes `manifest.json` last.
pub fn write_manifest<C: Serialize>(
    out: &OutDir,
    command: &str,
    config: &C,
    seeds: Vec<u64>,
    horizon: Option<usize>,
    started_at: chrono::DateTime<chrono::Utc>,
) -> Result<RunManifest, AppError> {
    let path = out.root().join("manifest.json");
    let config_json = serde_json::to_value(config).map_err(|e| io_err(&path, e))?;
    let canonical = serde_json::to_vec(&config_json).map_err(|e| io_err(&path, e))?;
    let mut outputs = BTreeMap::new();
    for name in out.written() {
        outputs.insert(name.clone(), sha256_file(&out.root().join(name))?);
    }
    let manifest = RunManifest {
        command: command.to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: sha256_hex(&canonical),
        config: config_json,
        seeds,
        horizon,
        started_at: started_at.to_rfc3339(),
        finished_at: chrono::Utc::now().to_rfc3339(),
        outputs,
    };
    write_json(&path, &manifest)?;
    Ok(manifest)
}
