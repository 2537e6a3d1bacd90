use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ksearch_core::io::{split_metadata, Metadata};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything needed to regenerate a set of output files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub params: Value,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new<P: Serialize>(command: &str, params: &P, outputs: &[PathBuf]) -> CliResult<Self> {
        Ok(Self {
            command: command.into(),
            version: TOOL_VERSION.into(),
            params: serde_json::to_value(params).map_err(|e| CliError::Format(e.to_string()))?,
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        })
    }

    /// One `manifest=<json>` metadata entry.
    pub fn metadata(&self) -> Metadata {
        let json = serde_json::to_string(self).expect("manifest serializes");
        vec![("manifest".into(), json)]
    }

    pub fn from_csv(text: &str) -> CliResult<Self> {
        let (meta, _) = split_metadata(text);
        let (_, json) = meta
            .iter()
            .find(|(k, _)| k == "manifest")
            .ok_or_else(|| CliError::Format("no manifest line in CSV metadata".into()))?;
        serde_json::from_str(json).map_err(|e| CliError::Format(format!("manifest: {e}")))
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| CliError::Format(e.to_string()))?;
        let m = v
            .get("manifest")
            .ok_or_else(|| CliError::Format("no `manifest` key".into()))?;
        serde_json::from_value(m.clone()).map_err(|e| CliError::Format(format!("manifest: {e}")))
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        if is_json(path) {
            Self::from_json(&text)
        } else {
            Self::from_csv(&text)
        }
    }

    pub fn params<T: serde::de::DeserializeOwned>(&self) -> CliResult<T> {
        serde_json::from_value(self.params.clone())
            .map_err(|e| CliError::Format(format!("manifest parameters: {e}")))
    }
}

pub fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "json")
}

/// Whether two renderings of the same output file carry the same data:
/// CSV bodies are compared byte for byte, JSON documents without their
/// manifests.
pub fn same_content(path: &Path, a: &str, b: &str) -> CliResult<bool> {
    if !is_json(path) {
        return Ok(ksearch_core::io::csv_body(a) == ksearch_core::io::csv_body(b));
    }
    let strip = |t: &str| -> CliResult<Value> {
        let mut v: Value = serde_json::from_str(t).map_err(|e| CliError::Format(e.to_string()))?;
        if let Some(o) = v.as_object_mut() {
            o.remove("manifest");
        }
        Ok(v)
    };
    Ok(strip(a)? == strip(b)?)
}

/// `prefix` with `suffix` appended to its file name.
pub fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Output prefix: `--out` without a `.csv`/`.json` extension, or
/// `default_stem` under `$KSEARCH_OUT_DIR` (current directory if unset).
pub fn output_prefix(out: Option<&Path>, default_stem: &str) -> PathBuf {
    match out {
        Some(p) => strip_output_suffix(p),
        None => std::env::var_os("KSEARCH_OUT_DIR")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("."))
            .join(default_stem),
    }
}

/// Inverse of the names produced from a prefix.
pub fn strip_output_suffix(path: &Path) -> PathBuf {
    let s = path.to_string_lossy();
    for suffix in ["_table.csv", "_curves.csv", ".csv", ".json"] {
        if let Some(stem) = s.strip_suffix(suffix) {
            return PathBuf::from(stem);
        }
    }
    path.to_path_buf()
}

/// Creates the parent directory and writes through a buffered file.
pub fn write_file(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>,
) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(path, e))
}
