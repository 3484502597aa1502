//! CSV and JSON report files.

use std::path::Path;

use serde::Serialize;

use crate::ExperimentError;

pub fn csv_bytes<R: Serialize>(rows: &[R]) -> Result<Vec<u8>, ExperimentError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| ExperimentError::Report(e.to_string()))?;
    }
    w.into_inner().map_err(|e| ExperimentError::Report(e.to_string()))
}

pub fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> Result<(), ExperimentError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, csv_bytes(rows)?)?;
    Ok(())
}

pub fn write_json<V: Serialize>(path: &Path, value: &V) -> Result<(), ExperimentError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value).map_err(|e| ExperimentError::Report(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
