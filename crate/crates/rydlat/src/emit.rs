//! Ordered file emission: CSV tables with a metadata trailer, JSON side files,
//! and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const METADATA_PREFIX: &str = "# metadata ";

pub fn manifest_name(subcommand: &str) -> String {
    format!("{subcommand}.manifest.json")
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Renders a numeric table with header, `\n` line endings and a metadata trailer.
pub fn render_csv(header: &[&str], rows: &[Vec<f64>], metadata: &Value) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        let cells: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out.push_str(METADATA_PREFIX);
    out.push_str(&metadata.to_string());
    out.push('\n');
    out
}

/// Splits a CSV produced by [`render_csv`] into header, rows and metadata.
pub fn read_csv(text: &str) -> Option<(Vec<String>, Vec<Vec<f64>>, Value)> {
    let mut lines = text.lines();
    let header = lines.next()?.split(',').map(str::to_string).collect();
    let mut rows = Vec::new();
    let mut meta = None;
    for line in lines {
        if let Some(m) = line.strip_prefix(METADATA_PREFIX) {
            meta = Some(serde_json::from_str(m).ok()?);
        } else {
            rows.push(line.split(',').map(|c| c.parse().ok()).collect::<Option<Vec<f64>>>()?);
        }
    }
    Some((header, rows, meta?))
}

#[derive(Debug, Clone, Serialize)]
struct FileRecord {
    path: String,
    bytes: usize,
    sha256: String,
}

#[derive(Debug, Clone, Serialize)]
struct InputRecord {
    role: String,
    path: String,
    sha256: String,
}

/// Writes files into one directory in call order and remembers their hashes.
#[derive(Debug)]
pub struct Emitter {
    dir: PathBuf,
    subcommand: String,
    base_metadata: Value,
    files: Vec<FileRecord>,
    inputs: Vec<InputRecord>,
}

impl Emitter {
    /// `snapshot` is the effective scenario; it goes into every trailer.
    pub fn create(dir: &Path, subcommand: &str, snapshot: Value, seed: u64) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let base_metadata = json!({
            "subcommand": subcommand,
            "generator": concat!("rydlat ", env!("CARGO_PKG_VERSION")),
            "seed": seed,
            "scenario": snapshot,
        });
        Ok(Self { dir: dir.to_path_buf(), subcommand: subcommand.to_string(), base_metadata, files: Vec::new(), inputs: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Records an input for provenance by its SHA-256.
    pub fn record_input(&mut self, role: &str, path: &str, sha256: String) {
        self.inputs.push(InputRecord { role: role.to_string(), path: path.to_string(), sha256 });
    }

    fn metadata(&self, extra: Value) -> Value {
        let mut m = self.base_metadata.clone();
        if let (Value::Object(dst), Value::Object(src)) = (&mut m, extra) {
            dst.extend(src);
        }
        m
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.files.push(FileRecord { path: name.to_string(), bytes: bytes.len(), sha256: sha256_hex(bytes) });
        Ok(path)
    }

    /// Writes a numeric CSV; `extra` is merged into the trailer metadata.
    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<f64>], extra: Value) -> CliResult<PathBuf> {
        let text = render_csv(header, rows, &self.metadata(extra));
        self.write_bytes(name, text.as_bytes())
    }

    pub fn write_json(&mut self, name: &str, value: Value) -> CliResult<PathBuf> {
        let mut text = serde_json::to_string_pretty(&self.metadata(value)).expect("json");
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    /// Writes `<subcommand>.manifest.json` listing every file and input.
    pub fn finish(self) -> CliResult<PathBuf> {
        let scenario_sha256 = sha256_hex(self.base_metadata["scenario"].to_string().as_bytes());
        let manifest = json!({
            "subcommand": self.subcommand,
            "generator": self.base_metadata["generator"],
            "seed": self.base_metadata["seed"],
            "scenario_sha256": scenario_sha256,
            "inputs": self.inputs,
            "files": self.files,
        });
        let path = self.dir.join(manifest_name(&self.subcommand));
        let mut text = serde_json::to_string_pretty(&manifest).expect("json");
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, std::f64::consts::PI] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
            assert_eq!(mantissa.len(), 17, "{s}");
        }
    }

    #[test]
    fn csv_layout() {
        let text = render_csv(&["a", "b"], &[vec![1.0, 2.0]], &json!({"k": 1}));
        assert!(!text.contains('\r'));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "a,b");
        assert_eq!(lines[1], "1.0000000000000000e0,2.0000000000000000e0");
        assert_eq!(lines[2], "# metadata {\"k\":1}");
        let (h, rows, meta) = read_csv(&text).unwrap();
        assert_eq!(h, ["a", "b"]);
        assert_eq!(rows, vec![vec![1.0, 2.0]]);
        assert_eq!(meta["k"], 1);
    }

    #[test]
    fn sha_known_value() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
