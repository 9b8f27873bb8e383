//! Curve export and import.
//!
//! CSV layout: `#`-prefixed header lines (dims, step, nyquist, one line per
//! curve, parameters), then a column header and one row per shell. A single
//! curve uses the columns `shell,freq_abs,freq_frac_nyquist,value,flags`;
//! several curves on one axis use `<name>` and `<name>:flags` pairs in place
//! of `value,flags`. Numbers are printed in shortest round-trip form so a
//! read returns bit-identical values.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use fscinfo::{Curve64, CurveKind, ShellFlags};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// `.json` means JSON, everything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

/// A set of curves sharing one frequency axis, with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveFile {
    pub dims: Vec<usize>,
    pub step: f64,
    pub params: BTreeMap<String, String>,
    pub curves: Vec<Curve64>,
}

impl CurveFile {
    pub fn new(dims: &[usize], step: f64, curves: Vec<Curve64>) -> Result<Self> {
        let f = Self {
            dims: dims.to_vec(),
            step,
            params: BTreeMap::new(),
            curves,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn with_param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    pub fn validate(&self) -> Result<()> {
        let first = self
            .curves
            .first()
            .ok_or_else(|| CliError::Data("curve set is empty".into()))?;
        for c in &self.curves[1..] {
            first.ensure_same_axis(c)?;
        }
        Ok(())
    }

    pub fn get(&self, label: &str) -> Option<&Curve64> {
        self.curves.iter().find(|c| c.label == label)
    }

    fn nyquist(&self) -> f64 {
        self.curves[0].nyquist
    }
}

fn column_name(label: &str, index: usize) -> String {
    let s: String = label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.' { c } else { '_' })
        .collect();
    if s.is_empty() {
        format!("curve{index}")
    } else {
        s
    }
}

fn dims_string(dims: &[usize]) -> String {
    dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("x")
}

pub fn to_csv(f: &CurveFile) -> Result<String> {
    f.validate()?;
    let mut out = String::new();
    out.push_str("# fscinfo curve file\n");
    out.push_str(&format!("# dims: {}\n", dims_string(&f.dims)));
    out.push_str(&format!("# step: {:?}\n", f.step));
    out.push_str(&format!("# nyquist: {:?}\n", f.nyquist()));
    for c in &f.curves {
        out.push_str(&format!("# curve: kind={} label={}\n", c.kind, c.label));
    }
    for (k, v) in &f.params {
        out.push_str(&format!("# param: {k}={v}\n"));
    }
    let single = f.curves.len() == 1;
    out.push_str("shell,freq_abs,freq_frac_nyquist");
    if single {
        out.push_str(",value,flags");
    } else {
        for (i, c) in f.curves.iter().enumerate() {
            let n = column_name(&c.label, i);
            out.push_str(&format!(",{n},{n}:flags"));
        }
    }
    out.push('\n');
    let axis = &f.curves[0];
    for s in 0..axis.n_shells() {
        out.push_str(&format!("{s},{:?},{:?}", axis.freq[s], axis.fraction_of_nyquist(s)));
        for c in &f.curves {
            out.push_str(&format!(",{:?},{}", c.values[s], c.flags[s]));
        }
        out.push('\n');
    }
    Ok(out)
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| CliError::Data(format!("cannot parse {what} {s:?}")))
}

pub fn from_csv(text: &str) -> Result<CurveFile> {
    let mut dims = Vec::new();
    let mut step = None;
    let mut nyquist = None;
    let mut meta: Vec<(CurveKind, String)> = Vec::new();
    let mut params = BTreeMap::new();
    let mut header: Option<Vec<String>> = None;
    let mut rows: Vec<Vec<String>> = Vec::new();
    for line in text.lines() {
        let line = line.trim_end_matches('\r');
        if let Some(h) = line.strip_prefix('#') {
            let h = h.trim();
            if let Some(v) = h.strip_prefix("dims:") {
                dims = v
                    .trim()
                    .split('x')
                    .filter(|s| !s.is_empty())
                    .map(|d| d.parse().map_err(|_| CliError::Data(format!("bad dims {v:?}"))))
                    .collect::<Result<_>>()?;
            } else if let Some(v) = h.strip_prefix("step:") {
                step = Some(parse_f64(v, "step")?);
            } else if let Some(v) = h.strip_prefix("nyquist:") {
                nyquist = Some(parse_f64(v, "nyquist")?);
            } else if let Some(v) = h.strip_prefix("curve:") {
                let v = v.trim();
                let rest = v
                    .strip_prefix("kind=")
                    .ok_or_else(|| CliError::Data(format!("bad curve line {v:?}")))?;
                let (kind, label) = rest
                    .split_once(" label=")
                    .ok_or_else(|| CliError::Data(format!("bad curve line {v:?}")))?;
                let kind = kind.parse::<CurveKind>().map_err(CliError::from)?;
                meta.push((kind, label.to_string()));
            } else if let Some(v) = h.strip_prefix("param:") {
                if let Some((k, val)) = v.trim().split_once('=') {
                    params.insert(k.to_string(), val.to_string());
                }
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<String> = line.split(',').map(|s| s.trim().to_string()).collect();
        if header.is_none() {
            header = Some(cells);
        } else {
            rows.push(cells);
        }
    }
    let header = header.ok_or_else(|| CliError::Data("curve file has no column header".into()))?;
    if header.len() < 5 || header[..3] != ["shell", "freq_abs", "freq_frac_nyquist"] {
        return Err(CliError::Data(format!("unexpected columns {header:?}")));
    }
    let n_curves = (header.len() - 3) / 2;
    if header.len() != 3 + 2 * n_curves {
        return Err(CliError::Data("value and flag columns must come in pairs".into()));
    }
    if meta.is_empty() {
        let names: Vec<(CurveKind, String)> = if n_curves == 1 {
            vec![(CurveKind::Other, "value".into())]
        } else {
            (0..n_curves).map(|i| (CurveKind::Other, header[3 + 2 * i].clone())).collect()
        };
        meta = names;
    }
    if meta.len() != n_curves {
        return Err(CliError::Data(format!(
            "header declares {} curves but columns hold {n_curves}",
            meta.len()
        )));
    }
    let mut freq = Vec::with_capacity(rows.len());
    let mut values = vec![Vec::with_capacity(rows.len()); n_curves];
    let mut flags = vec![Vec::with_capacity(rows.len()); n_curves];
    for (i, r) in rows.iter().enumerate() {
        if r.len() != header.len() {
            return Err(CliError::Data(format!("row {i} has {} cells, expected {}", r.len(), header.len())));
        }
        let shell: usize = r[0].parse().map_err(|_| CliError::Data(format!("bad shell index {:?}", r[0])))?;
        if shell != i {
            return Err(CliError::Data(format!("rows must be sorted by shell; found {shell} at row {i}")));
        }
        freq.push(parse_f64(&r[1], "frequency")?);
        for c in 0..n_curves {
            values[c].push(parse_f64(&r[3 + 2 * c], "value")?);
            flags[c].push(r[4 + 2 * c].parse::<ShellFlags>().map_err(CliError::from)?);
        }
    }
    let nyquist = match nyquist {
        Some(n) => n,
        None => *freq.last().ok_or_else(|| CliError::Data("curve file has no rows".into()))?,
    };
    let curves = meta
        .into_iter()
        .zip(values.into_iter().zip(flags))
        .map(|((kind, label), (v, fl))| {
            let mut c = Curve64::new(kind, v, freq.clone(), nyquist)?.with_label(label);
            c.flags = fl;
            Ok(c)
        })
        .collect::<std::result::Result<Vec<_>, fscinfo::Error>>()?;
    Ok(CurveFile {
        dims,
        step: step.unwrap_or(0.5 / nyquist),
        params,
        curves,
    })
}

#[derive(Serialize, Deserialize)]
struct JsonCurve {
    label: String,
    kind: CurveKind,
    nyquist: f64,
    freq: Vec<f64>,
    /// Undefined (NaN) values are stored as null.
    values: Vec<Option<f64>>,
    flags: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct JsonFile {
    dims: Vec<usize>,
    step: f64,
    params: BTreeMap<String, String>,
    curves: Vec<JsonCurve>,
}

pub fn to_json(f: &CurveFile) -> Result<String> {
    f.validate()?;
    let j = JsonFile {
        dims: f.dims.clone(),
        step: f.step,
        params: f.params.clone(),
        curves: f
            .curves
            .iter()
            .map(|c| JsonCurve {
                label: c.label.clone(),
                kind: c.kind,
                nyquist: c.nyquist,
                freq: c.freq.clone(),
                values: c.values.iter().map(|&v| if v.is_nan() { None } else { Some(v) }).collect(),
                flags: c.flags.iter().map(|f| f.to_string()).collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&j).map_err(|e| CliError::Data(e.to_string()))
}

pub fn from_json(text: &str) -> Result<CurveFile> {
    let j: JsonFile = serde_json::from_str(text).map_err(|e| CliError::Data(format!("invalid curve JSON: {e}")))?;
    let curves = j
        .curves
        .into_iter()
        .map(|c| {
            let values = c.values.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect();
            let mut curve = Curve64::new(c.kind, values, c.freq, c.nyquist)?.with_label(c.label);
            curve.flags = c
                .flags
                .iter()
                .map(|s| s.parse::<ShellFlags>().map_err(CliError::from))
                .collect::<Result<_>>()?;
            Ok(curve)
        })
        .collect::<Result<Vec<_>>>()?;
    let f = CurveFile {
        dims: j.dims,
        step: j.step,
        params: j.params,
        curves,
    };
    f.validate()?;
    Ok(f)
}

/// Writes the curve set; nothing is created if validation fails.
pub fn write_curves(f: &CurveFile, path: &Path, format: Format) -> Result<()> {
    let text = match format {
        Format::Csv => to_csv(f)?,
        Format::Json => to_json(f)?,
    };
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn read_curves(path: &Path) -> Result<CurveFile> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    match Format::from_path(path) {
        Format::Json => from_json(&text),
        Format::Csv => from_csv(&text),
    }
}
