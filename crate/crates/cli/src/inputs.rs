//! Loading of volumes, measurement-series manifests and 1D packets.

use std::fs;
use std::path::{Path, PathBuf};

use byteorder::{ByteOrder, LittleEndian};
use fscinfo::transducer::MeasurementSeries;
use fscinfo::{Packet64, Volume64};
use serde::Deserialize;

use crate::error::{CliError, Result};
use crate::mrc::read_mrc;

/// Reads an MRC volume, forwarding header warnings to stderr.
pub fn load_volume(path: &Path) -> Result<Volume64> {
    let m = read_mrc(path)?;
    for w in &m.warnings {
        eprintln!("warning: {}: {w}", path.display());
    }
    Ok(m.volume)
}

/// `{"step": 1.0, "pairs": [["a.mrc", "b.mrc"], ...]}`; relative paths are
/// resolved against the manifest's directory.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesManifest {
    pub step: f64,
    pub pairs: Vec<[PathBuf; 2]>,
}

pub fn read_manifest(path: &Path) -> Result<SeriesManifest> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut m: SeriesManifest =
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    for pair in &mut m.pairs {
        for p in pair.iter_mut() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
    Ok(m)
}

/// Loads every image of a manifest; the manifest step replaces header steps.
pub fn load_series(path: &Path) -> Result<MeasurementSeries<f64>> {
    let m = read_manifest(path)?;
    let pairs = m
        .pairs
        .iter()
        .map(|[a, b]| {
            let a = load_volume(a)?.with_step(m.step)?;
            let b = load_volume(b)?.with_step(m.step)?;
            Ok((a, b))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MeasurementSeries::new(pairs, m.step)?)
}

fn is_raw(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()).as_deref(),
        Some("f32" | "raw" | "bin")
    )
}

/// Samples from raw little-endian `f32` (`.f32`, `.raw`, `.bin`) or from text
/// with one value per line (first comma-separated column; `#` lines and a
/// non-numeric header line are skipped).
pub fn read_samples(path: &Path) -> Result<Vec<f64>> {
    if is_raw(path) {
        let bytes = fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        if bytes.len() % 4 != 0 {
            return Err(CliError::Truncated {
                expected: bytes.len().div_ceil(4) * 4,
                actual: bytes.len(),
            });
        }
        return Ok(bytes.chunks_exact(4).map(|c| LittleEndian::read_f32(c) as f64).collect());
    }
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let cell = t.split(',').next().unwrap_or("").trim();
        match cell.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if out.is_empty() && i == 0 => continue,
            Err(_) => {
                return Err(CliError::Data(format!("{}:{}: not a number: {cell:?}", path.display(), i + 1)));
            }
        }
    }
    Ok(out)
}

pub fn load_packet(path: &Path, step: f64) -> Result<Packet64> {
    Ok(Packet64::new(read_samples(path)?, step)?)
}
