//! CSV and manifest writers.
//!
//! Each CSV starts with one `#` line carrying the scenario hash, the tail
//! index and the tool version, followed by the fixed column header.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use netrisk::sweep::Row;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliResult;

pub const COLUMNS: [&str; 7] = ["param", "value", "quantity", "regime", "method", "point", "error_radius"];

/// One CSV record; `param` and `value` are empty for single-scenario runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub param: String,
    pub value: Option<f64>,
    pub quantity: String,
    pub regime: String,
    pub method: String,
    pub point: f64,
    pub error_radius: f64,
}

impl Record {
    pub fn scalar(quantity: impl Into<String>, regime: &str, method: &str, point: f64, error_radius: f64) -> Self {
        Self {
            param: String::new(),
            value: None,
            quantity: quantity.into(),
            regime: regime.to_string(),
            method: method.to_string(),
            point,
            error_radius,
        }
    }
}

impl From<Row> for Record {
    fn from(r: Row) -> Self {
        Self {
            param: r.param,
            value: Some(r.value),
            quantity: r.quantity,
            regime: r.regime,
            method: r.method,
            point: r.point,
            error_radius: r.error_radius,
        }
    }
}

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x}")
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of the canonical JSON form of `value`.
pub fn hash_of<T: Serialize>(value: &T) -> CliResult<String> {
    Ok(sha256_hex(serde_json::to_string(value)?.as_bytes()))
}

pub struct Preamble {
    pub scenario_hash: String,
    pub alpha: String,
    pub seed: Option<u64>,
}

impl Preamble {
    fn line(&self) -> String {
        let mut s = format!(
            "# netrisk {}; scenario_hash={}; alpha={}",
            env!("CARGO_PKG_VERSION"),
            self.scenario_hash,
            self.alpha
        );
        if let Some(seed) = self.seed {
            s += &format!("; seed={seed}");
        }
        s
    }
}

pub fn write_csv(path: &Path, preamble: &Preamble, records: &[Record]) -> CliResult<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{}", preamble.line())?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(COLUMNS)?;
    for r in records {
        w.write_record([
            r.param.as_str(),
            &r.value.map(fmt_f64).unwrap_or_default(),
            &r.quantity,
            &r.regime,
            &r.method,
            &fmt_f64(r.point),
            &fmt_f64(r.error_radius),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn ensure_dir(dir: &Path) -> CliResult<PathBuf> {
    std::fs::create_dir_all(dir)?;
    Ok(dir.to_path_buf())
}
