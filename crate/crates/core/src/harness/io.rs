//! File helpers shared by the CLI and the experiment driver.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::carrier::file::parse_carrier;
use crate::carrier::Carrier;
use crate::error::{JensenError, Result};
use crate::funcspace::file::{function_to_json, parse_function};
use crate::funcspace::BoundedFn;

fn io_error(path: &Path, source: std::io::Error) -> JensenError {
    JensenError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_error(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut body = text.to_owned();
    if !body.ends_with('\n') {
        body.push('\n');
    }
    fs::write(path, body).map_err(|e| io_error(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|source| JensenError::Json {
        context: path.display().to_string(),
        source,
    })
}

/// Pretty JSON with fields in declaration order.
pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report types serialize")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &to_json(value))
}

pub fn load_carrier(path: &Path) -> Result<Arc<Carrier>> {
    parse_carrier(&read_text(path)?).map(Arc::new)
}

pub fn load_function(path: &Path, carrier: Arc<Carrier>) -> Result<BoundedFn> {
    parse_function(&read_text(path)?, carrier)
}

pub fn save_function(path: &Path, f: &BoundedFn) -> Result<()> {
    write_text(path, &function_to_json(f)?)
}

/// `dir/G.json` → `dir/G.report.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    out.with_file_name(format!("{stem}.report.json"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_names() {
        assert_eq!(
            sidecar_path(Path::new("/tmp/G.json")),
            PathBuf::from("/tmp/G.report.json")
        );
        assert_eq!(sidecar_path(Path::new("g")), PathBuf::from("g.report.json"));
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let err = read_text(Path::new("/nonexistent/carrier.json")).unwrap_err();
        assert_eq!(err.kind(), "io");
        assert!(err.to_string().contains("/nonexistent/carrier.json"));
    }
}
