//! Output emission: 17-significant-digit float formatting, provenance
//! headers, CSV/JSON table rendering, and atomic file writes.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{io_err, Result};

/// Formats a float with 17 significant digits, which round-trips f64
/// exactly through text.
pub fn fmt17(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

pub fn fmt17_opt(v: Option<f64>) -> String {
    v.map(fmt17).unwrap_or_else(|| "nan".into())
}

/// Run metadata stamped into every output artifact.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub config_sha256: String,
}

impl Provenance {
    pub fn new(command: &str, seed: u64, config_bytes: &[u8]) -> Self {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(config_bytes);
        Self {
            tool: "ivsens",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed,
            config_sha256: format!("{digest:x}"),
        }
    }

    fn comment_line(&self) -> String {
        format!(
            "# {} {} command={} seed={} config_sha256={}",
            self.tool, self.version, self.command, self.seed, self.config_sha256
        )
    }
}

/// A rendered result table: CSV cells plus the equivalent JSON records.
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub records: serde_json::Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

pub fn render(provenance: &Provenance, table: &Table, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => {
            let mut out = String::new();
            out.push_str(&provenance.comment_line());
            out.push('\n');
            out.push_str(&table.header.join(","));
            out.push('\n');
            for row in &table.rows {
                out.push_str(&row.join(","));
                out.push('\n');
            }
            out
        }
        OutputFormat::Json => {
            let doc = serde_json::json!({
                "provenance": provenance,
                "records": table.records,
            });
            let mut text = serde_json::to_string_pretty(&doc).expect("serializable");
            text.push('\n');
            text
        }
    }
}

/// Writes to the path atomically (temp file in the same directory, then
/// rename), or to stdout when no path is given.
pub fn write_output(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        None => {
            print!("{content}");
            Ok(())
        }
        Some(path) => write_atomic(path, content.as_bytes()),
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| io_err(&format!("creating temp file in {}", dir.display()), e))?;
    tmp.write_all(bytes)
        .map_err(|e| io_err(&format!("writing {}", path.display()), e))?;
    tmp.persist(path)
        .map_err(|e| io_err(&format!("renaming into {}", path.display()), e))?;
    Ok(())
}
