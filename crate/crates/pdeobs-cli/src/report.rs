//! Deterministic output files: CSVs with a header row and 17-significant-
//! digit numbers (so values round-trip through text), plot-ready two-column
//! data files, and a run record tying the outputs back to the exact
//! configuration that produced them.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::config::{CliError, CliResult};

/// Fixed-width scientific notation with 16 fractional digits = 17
/// significant digits; `f64::from_str` recovers the exact bits.
pub fn fmt_float(x: f64) -> String {
    format!("{:.16e}", x)
}

pub fn ensure_out_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::failure("creating the output directory", e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes)
        .map_err(|e| CliError::failure("writing outputs", format!("{}: {}", path.display(), e)))
}

/// Write `name` under `dir` as CSV: one header row, then the given rows.
pub fn write_csv(
    dir: &Path,
    name: &str,
    header: &[&str],
    rows: &[Vec<String>],
) -> CliResult<PathBuf> {
    let mut text = String::new();
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        text.push_str(&row.join(","));
        text.push('\n');
    }
    let path = dir.join(name);
    write_bytes(&path, text.as_bytes())?;
    Ok(path)
}

/// Write a gnuplot-ready two-column data file (space separated, no header).
pub fn write_plot(dir: &Path, name: &str, points: &[(String, f64)]) -> CliResult<PathBuf> {
    let mut text = String::new();
    for (x, y) in points {
        text.push_str(&format!("{} {}\n", x, fmt_float(*y)));
    }
    let path = dir.join(name);
    write_bytes(&path, text.as_bytes())?;
    Ok(path)
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{:02x}", b)).collect()
}

/// Write `run_record.txt`: tool version, command, wall time, per-file
/// content hashes plus a combined hash, and the effective configuration.
/// Everything except the wall time is reproducible byte for byte.
pub fn write_run_record(
    dir: &Path,
    command: &str,
    snapshot: &str,
    wall_ms: u128,
    files: &[PathBuf],
) -> CliResult<PathBuf> {
    let mut record = String::new();
    record.push_str(&format!("tool_version = {}\n", env!("CARGO_PKG_VERSION")));
    record.push_str(&format!("command = {}\n", command));
    record.push_str(&format!("wall_time_ms = {}\n", wall_ms));
    let mut combined = String::new();
    let mut hash_lines = Vec::new();
    for path in files {
        let bytes = fs::read(path).map_err(|e| {
            CliError::failure("hashing outputs", format!("{}: {}", path.display(), e))
        })?;
        let digest = sha256_hex(&bytes);
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().to_string())
            .unwrap_or_else(|| path.display().to_string());
        combined.push_str(&digest);
        hash_lines.push(format!("file = {} sha256 {}\n", name, digest));
    }
    record.push_str(&format!(
        "content_hash = {}\n",
        sha256_hex(combined.as_bytes())
    ));
    for line in hash_lines {
        record.push_str(&line);
    }
    record.push('\n');
    record.push_str(snapshot);
    let path = dir.join("run_record.txt");
    write_bytes(&path, record.as_bytes())?;
    Ok(path)
}
