//! Byte-reproducible CSV and graymap writers.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// Shortest decimal that parses back to the same `f64`; exponent form
/// outside `[1e-5, 1e16)` so tiny densities stay compact.
pub fn format_float(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn format_optional(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

/// CSV text with a header line and one line per row.
pub fn csv_text(header: &str, rows: impl IntoIterator<Item = Vec<Option<f64>>>) -> String {
    let mut out = String::new();
    out.push_str(header);
    out.push('\n');
    for row in rows {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&format_optional(*v));
        }
        out.push('\n');
    }
    out
}

/// Binary graymap, one row per frame, each row scaled to its own maximum.
pub fn heatmap_pgm(frames: &[Vec<f64>]) -> Vec<u8> {
    let width = frames.first().map_or(0, Vec::len);
    let mut out = format!("P5\n{width} {}\n255\n", frames.len()).into_bytes();
    for row in frames {
        let max = row.iter().cloned().fold(0.0_f64, f64::max);
        out.extend(row.iter().map(|&d| {
            if max > 0.0 {
                (255.0 * d / max).round().clamp(0.0, 255.0) as u8
            } else {
                0
            }
        }));
    }
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ManifestEntry {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Writes `bytes` to `dir/name` and records its digest.
pub fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<ManifestEntry> {
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
    Ok(ManifestEntry {
        file: name.to_string(),
        bytes: bytes.len(),
        sha256: sha256_hex(bytes),
    })
}

/// Manifest as `name  bytes  digest` lines.
pub fn manifest_text(entries: &[ManifestEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        let _ = writeln!(out, "{}  {}  {}", e.file, e.bytes, e.sha256);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn float_formats() {
        assert_eq!(format_float(0.0), "0");
        assert_eq!(format_float(1.5), "1.5");
        assert_eq!(format_float(0.1 + 0.2), "0.30000000000000004");
        assert_eq!(format_float(2.5e-300), "2.5e-300");
        assert_eq!(format_float(-3e20), "-3e20");
    }

    #[test]
    fn csv_leaves_missing_fields_empty() {
        let text = csv_text("a,b", [vec![Some(1.0), None], vec![None, Some(0.25)]]);
        assert_eq!(text, "a,b\n1,\n,0.25\n");
    }

    #[test]
    fn heatmap_layout() {
        let frames = vec![vec![0.0, 1.0, 2.0], vec![4.0, 2.0, 0.0], vec![0.0; 3]];
        let pgm = heatmap_pgm(&frames);
        let header = b"P5\n3 3\n255\n";
        assert_eq!(&pgm[..header.len()], header);
        assert_eq!(&pgm[header.len()..], &[0, 128, 255, 255, 128, 0, 0, 0, 0]);
    }

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    proptest! {
        #[test]
        fn floats_round_trip(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            let back: f64 = format_float(x).parse().unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }
    }
}
