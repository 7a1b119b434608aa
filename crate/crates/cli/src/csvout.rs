//! CSV output with a `#`-prefixed metadata block and a JSON sidecar.
//!
//! The metadata block (tool version, effective config, wall-clock) is
//! excluded from the reproducibility contract; the body — header row plus
//! data rows — is byte-identical across re-runs with the same config and
//! seed, independent of the worker count.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::RunConfig;

/// Decimal formatting: `.` separator, shortest round-trip digits,
/// scientific notation for magnitudes >= 1e16 or <= 1e-4.
pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        return "nan".to_string();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if v == 0.0 {
        return "0".to_string();
    }
    let magnitude = v.abs();
    if magnitude >= 1e16 || magnitude <= 1e-4 {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: RunConfig,
    pub started_unix_seconds: f64,
    pub wallclock_seconds: f64,
    /// Extra command-specific annotations (e.g. abort markers).
    pub notes: Vec<String>,
}

impl RunMetadata {
    pub fn new(config: RunConfig) -> Self {
        Self {
            tool: "winfree",
            version: env!("CARGO_PKG_VERSION"),
            config,
            started_unix_seconds: unix_now(),
            wallclock_seconds: 0.0,
            notes: Vec::new(),
        }
    }
}

fn unix_now() -> f64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Writes `<out>` with the metadata block and body, plus the sidecar
/// `<out with .meta.json extension>` carrying the same metadata as JSON.
pub fn write_csv(
    out: &Path,
    header: &[&str],
    rows: &[Vec<String>],
    meta: &RunMetadata,
) -> Result<()> {
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating directory {}", parent.display()))?;
        }
    }
    let mut buf = Vec::with_capacity(64 * rows.len() + 512);
    writeln!(buf, "# tool: {} {}", meta.tool, meta.version)?;
    writeln!(buf, "# config: {}", serde_json::to_string(&meta.config)?)?;
    writeln!(buf, "# started_unix_seconds: {}", fmt_float(meta.started_unix_seconds))?;
    writeln!(buf, "# wallclock_seconds: {}", fmt_float(meta.wallclock_seconds))?;
    for note in &meta.notes {
        writeln!(buf, "# note: {note}")?;
    }
    writeln!(buf, "{}", header.join(","))?;
    for row in rows {
        writeln!(buf, "{}", row.join(","))?;
    }
    std::fs::write(out, &buf).with_context(|| format!("writing {}", out.display()))?;

    let sidecar = sidecar_path(out);
    std::fs::write(&sidecar, serde_json::to_string_pretty(meta)?)
        .with_context(|| format!("writing {}", sidecar.display()))?;
    Ok(())
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("meta.json")
}

/// The reproducible part of a CSV file: everything after the `#` block.
pub fn csv_body(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_decimal_in_normal_range() {
        assert_eq!(fmt_float(0.0), "0");
        assert_eq!(fmt_float(1.5), "1.5");
        assert_eq!(fmt_float(-0.25), "-0.25");
        assert_eq!(fmt_float(1234.0), "1234");
        assert_eq!(fmt_float(0.001), "0.001");
    }

    #[test]
    fn scientific_outside_the_window() {
        assert_eq!(fmt_float(1e-4), "1e-4");
        assert_eq!(fmt_float(5e-7), "5e-7");
        assert_eq!(fmt_float(1e16), "1e16");
        assert_eq!(fmt_float(-2.5e18), "-2.5e18");
    }

    #[test]
    fn boundary_values() {
        // 1e-4 inclusive goes scientific; just above stays decimal.
        assert_eq!(fmt_float(1.0001e-4), "0.00010001");
        assert_eq!(fmt_float(9.99e15), "9990000000000000");
    }

    #[test]
    fn special_values() {
        assert_eq!(fmt_float(f64::INFINITY), "inf");
        assert_eq!(fmt_float(f64::NEG_INFINITY), "-inf");
        assert_eq!(fmt_float(f64::NAN), "nan");
    }

    #[test]
    fn round_trip_is_exact() {
        for &v in &[std::f64::consts::PI, 0.1, 2.0 / 3.0, 1.23456789e-3] {
            let s = fmt_float(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
    }

    #[test]
    fn body_strips_metadata_lines() {
        let text = "# tool: winfree\n# config: {}\na,b\n1,2\n";
        assert_eq!(csv_body(text), "a,b\n1,2");
    }
}
