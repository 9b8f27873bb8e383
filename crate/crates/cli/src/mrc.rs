//! MRC2014 map reading and writing.
//!
//! Reads modes 0 (int8), 1 (int16), 2 (float32) and 6 (uint16) in either
//! byte order, honouring the axis mapping words; always writes mode 2 in
//! the machine's native byte order. Volumes come back x-fastest with shape
//! `[nz, ny, nx]`, or `[ny, nx]` when `nz == 1`.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use byteorder::{BigEndian, ByteOrder, LittleEndian};
use fscinfo::locality::{CellState, InfoMap};
use fscinfo::Volume64;

use crate::error::{CliError, Result};

pub const HEADER_LEN: usize = 1024;
const LABEL_LEN: usize = 80;
const MAX_LABELS: usize = 10;
/// Relative step anisotropy above which a warning is raised.
pub const ISOTROPY_TOLERANCE: f64 = 1e-3;
const STEP_LABEL: &str = "fscinfo step=";
const FILL_LABEL: &str = "fscinfo unevaluated fill=";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endian {
    Little,
    Big,
}

impl Endian {
    pub fn native() -> Self {
        if cfg!(target_endian = "big") {
            Endian::Big
        } else {
            Endian::Little
        }
    }

    fn stamp(self) -> [u8; 4] {
        match self {
            Endian::Little => [0x44, 0x44, 0x00, 0x00],
            Endian::Big => [0x11, 0x11, 0x00, 0x00],
        }
    }
}

/// Header fields this tool reads or writes.
#[derive(Debug, Clone, PartialEq)]
pub struct MrcHeader {
    /// Columns, rows, sections as stored.
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub mode: i32,
    pub sampling: [usize; 3],
    /// Cell edge lengths (Å) along X, Y, Z.
    pub cell: [f32; 3],
    /// Spatial axis (1 = X, 2 = Y, 3 = Z) of columns, rows and sections.
    pub axis_map: [usize; 3],
    pub origin: [f32; 3],
    pub extended_len: usize,
    pub endian: Endian,
    pub labels: Vec<String>,
}

impl MrcHeader {
    /// Voxel step along X, Y, Z.
    pub fn steps(&self) -> [f64; 3] {
        let mut s = [0.0; 3];
        for a in 0..3 {
            let m = self.sampling[a].max(1);
            s[a] = self.cell[a] as f64 / m as f64;
        }
        s
    }
}

/// A volume read from disk, with the header and any warnings raised.
#[derive(Debug, Clone)]
pub struct MrcMap {
    pub volume: Volume64,
    pub header: MrcHeader,
    pub warnings: Vec<String>,
    /// Fill value declared for unevaluated cells, if any.
    pub fill: Option<f64>,
}

fn word<B: ByteOrder>(h: &[u8], index: usize) -> i32 {
    B::read_i32(&h[(index - 1) * 4..index * 4])
}

fn fword<B: ByteOrder>(h: &[u8], index: usize) -> f32 {
    B::read_f32(&h[(index - 1) * 4..index * 4])
}

fn detect_endian(h: &[u8]) -> Endian {
    match h[212] {
        0x44 => Endian::Little,
        0x11 => Endian::Big,
        // Pre-2014 files may lack a stamp: pick the order giving a sane mode.
        _ => {
            let le = LittleEndian::read_i32(&h[12..16]);
            if (0..=16).contains(&le) {
                Endian::Little
            } else {
                Endian::Big
            }
        }
    }
}

fn parse_header<B: ByteOrder>(h: &[u8], endian: Endian) -> Result<MrcHeader> {
    if &h[208..212] != b"MAP " {
        return Err(CliError::BadMagic);
    }
    let dim = |i| -> Result<usize> {
        let v = word::<B>(h, i);
        if v <= 0 {
            Err(CliError::Data(format!("header word {i} must be positive, got {v}")))
        } else {
            Ok(v as usize)
        }
    };
    let (nx, ny, nz) = (dim(1)?, dim(2)?, dim(3)?);
    let mode = word::<B>(h, 4);
    let cell = [fword::<B>(h, 11), fword::<B>(h, 12), fword::<B>(h, 13)];
    let mut axis_map = [word::<B>(h, 17), word::<B>(h, 18), word::<B>(h, 19)].map(|v| v.max(0) as usize);
    if axis_map == [0, 0, 0] {
        axis_map = [1, 2, 3];
    }
    let mut sorted = axis_map;
    sorted.sort_unstable();
    if sorted != [1, 2, 3] {
        return Err(CliError::Data(format!("invalid axis mapping {axis_map:?}")));
    }
    let extents = spatial_extents([nx, ny, nz], axis_map);
    let mut sampling = [0usize; 3];
    for (a, s) in sampling.iter_mut().enumerate() {
        let v = word::<B>(h, 8 + a);
        *s = if v > 0 { v as usize } else { extents[a] };
    }
    let ext = word::<B>(h, 24);
    if ext < 0 {
        return Err(CliError::Data(format!("negative extended header length {ext}")));
    }
    let nlabl = (word::<B>(h, 56).clamp(0, MAX_LABELS as i32)) as usize;
    let labels = (0..nlabl)
        .map(|i| {
            let s = &h[224 + i * LABEL_LEN..224 + (i + 1) * LABEL_LEN];
            String::from_utf8_lossy(s).trim_end_matches(['\0', ' ']).to_string()
        })
        .collect();
    Ok(MrcHeader {
        nx,
        ny,
        nz,
        mode,
        sampling,
        cell,
        axis_map,
        origin: [fword::<B>(h, 50), fword::<B>(h, 51), fword::<B>(h, 52)],
        extended_len: ext as usize,
        endian,
        labels,
    })
}

/// Extent along X, Y, Z given the stored column/row/section extents.
fn spatial_extents(file_dims: [usize; 3], axis_map: [usize; 3]) -> [usize; 3] {
    let mut ext = [0usize; 3];
    for (file_axis, &spatial) in axis_map.iter().enumerate() {
        ext[spatial - 1] = file_dims[file_axis];
    }
    ext
}

fn decode<B: ByteOrder>(mode: i32, raw: &[u8]) -> Vec<f64> {
    match mode {
        0 => raw.iter().map(|&b| b as i8 as f64).collect(),
        1 => raw.chunks_exact(2).map(|c| B::read_i16(c) as f64).collect(),
        2 => raw.chunks_exact(4).map(|c| B::read_f32(c) as f64).collect(),
        6 => raw.chunks_exact(2).map(|c| B::read_u16(c) as f64).collect(),
        _ => unreachable!("mode checked by caller"),
    }
}

fn bytes_per_voxel(mode: i32) -> Result<usize> {
    match mode {
        0 => Ok(1),
        1 | 6 => Ok(2),
        2 => Ok(4),
        m => Err(CliError::UnsupportedMode(m)),
    }
}

/// Shortest decimal that round-trips through single precision, so steps
/// written by this tool read back exactly.
fn f32_decimal(x: f64) -> f64 {
    format!("{}", x as f32).parse().unwrap_or(x)
}

fn label_value(labels: &[String], key: &str) -> Option<f64> {
    labels
        .iter()
        .find_map(|l| l.strip_prefix(key))
        .and_then(|v| v.trim().parse().ok())
}

pub fn read_mrc(path: &Path) -> Result<MrcMap> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_mrc(&bytes)
}

pub fn parse_mrc(bytes: &[u8]) -> Result<MrcMap> {
    if bytes.len() < HEADER_LEN {
        return Err(CliError::Truncated {
            expected: HEADER_LEN,
            actual: bytes.len(),
        });
    }
    let h = &bytes[..HEADER_LEN];
    let endian = detect_endian(h);
    let header = match endian {
        Endian::Little => parse_header::<LittleEndian>(h, endian)?,
        Endian::Big => parse_header::<BigEndian>(h, endian)?,
    };
    let bpv = bytes_per_voxel(header.mode)?;
    let n = header.nx * header.ny * header.nz;
    let start = HEADER_LEN + header.extended_len;
    let expected = start + n * bpv;
    if bytes.len() < expected {
        return Err(CliError::Truncated {
            expected,
            actual: bytes.len(),
        });
    }
    let raw = &bytes[start..expected];
    let stored = match endian {
        Endian::Little => decode::<LittleEndian>(header.mode, raw),
        Endian::Big => decode::<BigEndian>(header.mode, raw),
    };

    let [ex, ey, ez] = spatial_extents([header.nx, header.ny, header.nz], header.axis_map);
    let mut data = vec![0.0; n];
    let mut xyz = [0usize; 3];
    let mut i = 0;
    for s in 0..header.nz {
        for r in 0..header.ny {
            for c in 0..header.nx {
                let idx = [c, r, s];
                for file_axis in 0..3 {
                    xyz[header.axis_map[file_axis] - 1] = idx[file_axis];
                }
                data[(xyz[2] * ey + xyz[1]) * ex + xyz[0]] = stored[i];
                i += 1;
            }
        }
    }

    let steps = header.steps();
    let mut warnings = Vec::new();
    let used: Vec<f64> = if ez == 1 { steps[..2].to_vec() } else { steps.to_vec() };
    let (lo, hi) = used.iter().fold((f64::MAX, f64::MIN), |(a, b), &s| (a.min(s), b.max(s)));
    if !(lo > 0.0) {
        return Err(CliError::Data(format!("non-positive voxel step in header: {steps:?}")));
    }
    if (hi - lo) / lo > ISOTROPY_TOLERANCE {
        warnings.push(format!(
            "voxel steps {used:?} differ by more than {}%; using the X step",
            ISOTROPY_TOLERANCE * 100.0
        ));
    }
    let step = match label_value(&header.labels, STEP_LABEL) {
        Some(s) if ((s - steps[0]) / steps[0]).abs() < 1e-6 => s,
        _ => f32_decimal(steps[0]),
    };
    let dims: Vec<usize> = if ez == 1 { vec![ey, ex] } else { vec![ez, ey, ex] };
    let volume = Volume64::new(&dims, step, data).map_err(CliError::from)?;
    let fill = label_value(&header.labels, FILL_LABEL);
    Ok(MrcMap {
        volume,
        header,
        warnings,
        fill,
    })
}

fn xyz_dims(dims: &[usize]) -> Result<[usize; 3]> {
    match *dims {
        [ny, nx] => Ok([nx, ny, 1]),
        [nz, ny, nx] => Ok([nx, ny, nz]),
        _ => Err(CliError::Data(format!("MRC output needs a 2D or 3D volume, got {}D", dims.len()))),
    }
}

fn encode_header<B: ByteOrder>(v: &Volume64, endian: Endian, labels: &[String]) -> Result<Vec<u8>> {
    let [nx, ny, nz] = xyz_dims(v.dims())?;
    let mut h = vec![0u8; HEADER_LEN];
    let put_i = |h: &mut [u8], i: usize, x: i32| B::write_i32(&mut h[(i - 1) * 4..i * 4], x);
    let put_f = |h: &mut [u8], i: usize, x: f32| B::write_f32(&mut h[(i - 1) * 4..i * 4], x);
    put_i(&mut h, 1, nx as i32);
    put_i(&mut h, 2, ny as i32);
    put_i(&mut h, 3, nz as i32);
    put_i(&mut h, 4, 2);
    put_i(&mut h, 8, nx as i32);
    put_i(&mut h, 9, ny as i32);
    put_i(&mut h, 10, nz as i32);
    let step = v.step();
    put_f(&mut h, 11, (nx as f64 * step) as f32);
    put_f(&mut h, 12, (ny as f64 * step) as f32);
    put_f(&mut h, 13, (nz as f64 * step) as f32);
    for i in 14..=16 {
        put_f(&mut h, i, 90.0);
    }
    put_i(&mut h, 17, 1);
    put_i(&mut h, 18, 2);
    put_i(&mut h, 19, 3);
    let d = v.data();
    let (mn, mx) = d.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
    let mean = v.mean();
    let rms = (d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / d.len() as f64).sqrt();
    put_f(&mut h, 20, mn as f32);
    put_f(&mut h, 21, mx as f32);
    put_f(&mut h, 22, mean as f32);
    put_i(&mut h, 23, if nz > 1 { 1 } else { 0 });
    put_i(&mut h, 29, 20140);
    h[208..212].copy_from_slice(b"MAP ");
    h[212..216].copy_from_slice(&endian.stamp());
    put_f(&mut h, 55, rms as f32);
    let labels: Vec<&String> = labels.iter().take(MAX_LABELS).collect();
    put_i(&mut h, 56, labels.len() as i32);
    for (i, l) in labels.iter().enumerate() {
        let b = l.as_bytes();
        let n = b.len().min(LABEL_LEN);
        h[224 + i * LABEL_LEN..224 + i * LABEL_LEN + n].copy_from_slice(&b[..n]);
    }
    Ok(h)
}

fn encode_data<B: ByteOrder>(v: &Volume64) -> Vec<u8> {
    let mut out = vec![0u8; v.len() * 4];
    for (chunk, &x) in out.chunks_exact_mut(4).zip(v.data()) {
        B::write_f32(chunk, x as f32);
    }
    out
}

/// Serializes a volume as a mode-2 MRC2014 file in the given byte order.
pub fn encode_mrc(v: &Volume64, endian: Endian, extra_labels: &[String]) -> Result<Vec<u8>> {
    let mut labels = vec![format!("{STEP_LABEL}{:?}", v.step())];
    labels.extend(extra_labels.iter().cloned());
    let (mut h, d) = match endian {
        Endian::Little => (encode_header::<LittleEndian>(v, endian, &labels)?, encode_data::<LittleEndian>(v)),
        Endian::Big => (encode_header::<BigEndian>(v, endian, &labels)?, encode_data::<BigEndian>(v)),
    };
    h.extend_from_slice(&d);
    Ok(h)
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let f = File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(f);
    w.write_all(bytes)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn write_mrc(v: &Volume64, path: &Path) -> Result<()> {
    write_mrc_with(v, path, Endian::native(), &[])
}

pub fn write_mrc_with(v: &Volume64, path: &Path, endian: Endian, labels: &[String]) -> Result<()> {
    let bytes = encode_mrc(v, endian, labels)?;
    write_bytes(path, &bytes)
}

/// Writes an information map; unevaluated cells carry `fill`, which is
/// declared in a header label.
pub fn write_info_map(m: &InfoMap<f64>, fill: f64, path: &Path) -> Result<()> {
    let v = m.to_volume(fill).map_err(CliError::from)?;
    let saturated = m.states().iter().filter(|&&s| s == CellState::Saturated).count();
    let labels = vec![
        format!("{FILL_LABEL}{fill:?}"),
        format!("fscinfo saturated cells={saturated}"),
    ];
    write_mrc_with(&v, path, Endian::native(), &labels)
}
