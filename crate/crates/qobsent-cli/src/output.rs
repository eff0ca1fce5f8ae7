//! Deterministic CSV and metadata output.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use qobsent::scenarios::{Table, TableCell};

use crate::config::RunConfig;
use crate::CliError;

/// 12 significant digits: enough to reproduce runs bit-for-bit in practice
/// while staying above eigensolver noise.
pub fn format_float(x: f64) -> String {
    format!("{:.11e}", x)
}

fn format_cell(cell: &TableCell) -> String {
    match cell {
        TableCell::Float(x) => format_float(*x),
        TableCell::Int(i) => i.to_string(),
        TableCell::Text(s) => s.clone(),
    }
}

/// RFC-4180-style CSV: comma separated, '.' decimal point, '\n' endings.
pub fn render_csv(table: &Table) -> String {
    let mut out = String::new();
    out.push_str(&table.columns.join(","));
    out.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(format_cell).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_csv(table: &Table, path: &Path) -> Result<(), CliError> {
    fs::write(path, render_csv(table))?;
    Ok(())
}

/// Reproducibility sidecar written next to every CSV.
#[derive(Debug, Serialize, Deserialize)]
pub struct Metadata {
    pub code_version: String,
    pub seed: u64,
    pub config: RunConfig,
}

pub fn metadata_path(csv_path: &Path) -> PathBuf {
    let mut name = csv_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".into());
    name.push_str(".meta.json");
    csv_path.with_file_name(name)
}

pub fn write_metadata(config: &RunConfig, csv_path: &Path) -> Result<(), CliError> {
    let meta = Metadata {
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.seed,
        config: config.clone(),
    };
    let mut text = serde_json::to_string_pretty(&meta).map_err(CliError::Parse)?;
    text.push('\n');
    fs::write(metadata_path(csv_path), text)?;
    Ok(())
}
