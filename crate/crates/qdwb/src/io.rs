//! File formats: filter banks, coefficient pyramids, PGM images and raw
//! float images with a JSON sidecar.
//!
//! Bank and pyramid files are one JSON header line followed by a binary
//! payload of little-endian `f64` pairs `(re, im)`.

use crate::design::{FilterBank, PhaseVector, Role};
use crate::lattice::FreqGrid;
use crate::transform::{Band, CoefficientPyramid, TransformMode};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

pub const BANK_FORMAT: &str = "qdwb-bank";
pub const PYRAMID_FORMAT: &str = "qdwb-pyramid";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BankHeader {
    pub format: String,
    pub version: u32,
    pub n: usize,
    pub role: Role,
    pub labels: Vec<u8>,
    pub phases: Vec<(i64, i64)>,
    pub provenance: String,
}

fn put_complex(out: &mut Vec<u8>, z: C64) {
    out.extend_from_slice(&z.re.to_le_bytes());
    out.extend_from_slice(&z.im.to_le_bytes());
}

fn take_complex(payload: &[u8]) -> Vec<C64> {
    payload
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            C64::new(re, im)
        })
        .collect()
}

/// Splits `header-json \n payload`.
fn split_header(bytes: &[u8]) -> Result<(&[u8], &[u8])> {
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Format("missing header line".into()))?;
    Ok((&bytes[..nl], &bytes[nl + 1..]))
}

pub fn encode_bank(bank: &FilterBank, provenance: &str) -> Vec<u8> {
    let header = BankHeader {
        format: BANK_FORMAT.into(),
        version: FORMAT_VERSION,
        n: bank.grid.n(),
        role: bank.role,
        labels: bank.m.iter().map(|m| m.label).collect(),
        phases: bank.phases.iter().map(|p| p.eta).collect(),
        provenance: provenance.into(),
    };
    let mut out = serde_json::to_vec(&header).expect("header serialises");
    out.push(b'\n');
    for m in &bank.m {
        for &z in &m.values {
            put_complex(&mut out, z);
        }
    }
    out
}

pub fn decode_bank(bytes: &[u8]) -> Result<(FilterBank, BankHeader)> {
    let (head, payload) = split_header(bytes)?;
    let header: BankHeader = serde_json::from_slice(head).map_err(|e| Error::Format(format!("bank header: {e}")))?;
    if header.format != BANK_FORMAT || header.version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported format {} v{}",
            header.format, header.version
        )));
    }
    let grid = FreqGrid::new(header.n)?;
    let want = 7 * grid.len() * 16;
    if payload.len() != want {
        return Err(Error::Format(format!(
            "payload has {} bytes, expected {want}",
            payload.len()
        )));
    }
    if header.labels.len() != 7 || header.phases.len() != 7 {
        return Err(Error::Format("header needs seven labels and phases".into()));
    }
    let vals = take_complex(payload);
    let symbols = vals.chunks(grid.len()).map(|c| c.to_vec()).collect();
    let mut bank = FilterBank::new(grid, header.role, symbols)?;
    for (j, m) in bank.m.iter_mut().enumerate() {
        m.label = header.labels[j];
        bank.phases[j] = PhaseVector::new(header.phases[j].0, header.phases[j].1);
    }
    Ok((bank, header))
}

pub fn write_bank(path: &Path, bank: &FilterBank, provenance: &str) -> Result<()> {
    std::fs::write(path, encode_bank(bank, provenance))?;
    Ok(())
}

pub fn read_bank(path: &Path) -> Result<(FilterBank, BankHeader)> {
    decode_bank(&std::fs::read(path)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PyramidHeader {
    pub format: String,
    pub version: u32,
    pub mode: TransformMode,
    pub side: usize,
    pub levels: usize,
    /// `(rows, cols)` per stored band: levels in order, bands 1..6, then the low-pass.
    pub bands: Vec<(usize, usize)>,
}

pub fn encode_pyramid(p: &CoefficientPyramid) -> Vec<u8> {
    let all: Vec<&Band> = p.levels.iter().flatten().chain(std::iter::once(&p.low)).collect();
    let header = PyramidHeader {
        format: PYRAMID_FORMAT.into(),
        version: FORMAT_VERSION,
        mode: p.mode,
        side: p.side,
        levels: p.levels.len(),
        bands: all.iter().map(|b| (b.rows, b.cols)).collect(),
    };
    let mut out = serde_json::to_vec(&header).expect("header serialises");
    out.push(b'\n');
    for b in all {
        for &z in &b.data {
            put_complex(&mut out, z);
        }
    }
    out
}

pub fn decode_pyramid(bytes: &[u8]) -> Result<CoefficientPyramid> {
    let (head, payload) = split_header(bytes)?;
    let h: PyramidHeader = serde_json::from_slice(head).map_err(|e| Error::Format(format!("pyramid header: {e}")))?;
    if h.format != PYRAMID_FORMAT || h.version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported format {} v{}", h.format, h.version)));
    }
    if h.bands.len() != 6 * h.levels + 1 {
        return Err(Error::Format("band count does not match levels".into()));
    }
    let total: usize = h.bands.iter().map(|(r, c)| r * c).sum();
    if payload.len() != total * 16 {
        return Err(Error::Format(format!(
            "payload has {} bytes, expected {}",
            payload.len(),
            total * 16
        )));
    }
    let vals = take_complex(payload);
    let mut at = 0;
    let mut bands: Vec<Band> = h
        .bands
        .iter()
        .map(|&(rows, cols)| {
            let data = vals[at..at + rows * cols].to_vec();
            at += rows * cols;
            Band { rows, cols, data }
        })
        .collect();
    let low = bands.pop().expect("low band");
    let levels = bands.chunks(6).map(|c| c.to_vec()).collect();
    Ok(CoefficientPyramid {
        mode: h.mode,
        side: h.side,
        levels,
        low,
    })
}

pub fn write_pyramid(path: &Path, p: &CoefficientPyramid) -> Result<()> {
    std::fs::write(path, encode_pyramid(p))?;
    Ok(())
}

pub fn read_pyramid(path: &Path) -> Result<CoefficientPyramid> {
    decode_pyramid(&std::fs::read(path)?)
}

// ---------------------------------------------------------------------------
// images

/// Grey image with samples in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

fn pgm_token<R: BufRead>(r: &mut R) -> Result<String> {
    let mut tok = String::new();
    loop {
        let mut b = [0u8];
        if r.read(&mut b)? == 0 {
            break;
        }
        let c = b[0] as char;
        if c == '#' {
            let mut line = String::new();
            r.read_line(&mut line)?;
            continue;
        }
        if c.is_ascii_whitespace() {
            if tok.is_empty() {
                continue;
            }
            break;
        }
        tok.push(c);
    }
    if tok.is_empty() {
        return Err(Error::Format("truncated PGM header".into()));
    }
    Ok(tok)
}

fn pgm_number<R: BufRead>(r: &mut R) -> Result<usize> {
    pgm_token(r)?
        .parse()
        .map_err(|_| Error::Format("bad PGM number".into()))
}

/// Reads binary (`P5`, 8 or 16 bit) or ASCII (`P2`) PGM as raw grey levels.
pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut r = std::io::Cursor::new(bytes);
    let magic = pgm_token(&mut r)?;
    let width = pgm_number(&mut r)?;
    let height = pgm_number(&mut r)?;
    let maxval = pgm_number(&mut r)?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("PGM maxval {maxval}")));
    }
    let count = width * height;
    let data = match magic.as_str() {
        "P5" => {
            let start = r.position() as usize;
            let rest = &bytes[start..];
            let wide = maxval > 255;
            let need = count * if wide { 2 } else { 1 };
            if rest.len() < need {
                return Err(Error::Format("truncated PGM raster".into()));
            }
            if wide {
                rest[..need]
                    .chunks_exact(2)
                    .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64)
                    .collect()
            } else {
                rest[..need].iter().map(|&b| b as f64).collect()
            }
        }
        "P2" => (0..count)
            .map(|_| pgm_number(&mut r).map(|v| v as f64))
            .collect::<Result<Vec<_>>>()?,
        _ => return Err(Error::Format(format!("unsupported PGM magic {magic}"))),
    };
    Ok(GrayImage { width, height, data })
}

/// Binary 8-bit PGM.
pub fn encode_pgm(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

/// Rounds and clamps to `0..=255`.
pub fn to_u8_clamped(data: &[f64]) -> Vec<u8> {
    data.iter().map(|&v| v.round().clamp(0.0, 255.0) as u8).collect()
}

/// Linear map of `[0, max]` onto `0..=255`.
pub fn to_u8_normalized(data: &[f64]) -> Vec<u8> {
    let max = data.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 {
        return vec![0; data.len()];
    }
    data.iter().map(|&v| (255.0 * v.max(0.0) / max).round() as u8).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawSidecar {
    pub width: usize,
    pub height: usize,
    pub dtype: String,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Little-endian `f64` samples plus `<path>.json`.
pub fn write_raw(path: &Path, img: &GrayImage) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    for v in &img.data {
        f.write_all(&v.to_le_bytes())?;
    }
    let side = RawSidecar {
        width: img.width,
        height: img.height,
        dtype: "f64-le".into(),
    };
    std::fs::write(
        sidecar_path(path),
        serde_json::to_vec(&side).expect("sidecar serialises"),
    )?;
    Ok(())
}

pub fn read_raw(path: &Path) -> Result<GrayImage> {
    let side: RawSidecar = serde_json::from_slice(&std::fs::read(sidecar_path(path))?)
        .map_err(|e| Error::Format(format!("raw sidecar: {e}")))?;
    if side.dtype != "f64-le" {
        return Err(Error::Format(format!("unsupported dtype {}", side.dtype)));
    }
    let bytes = std::fs::read(path)?;
    if bytes.len() != side.width * side.height * 8 {
        return Err(Error::Format("raw payload length does not match the sidecar".into()));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok(GrayImage {
        width: side.width,
        height: side.height,
        data,
    })
}

/// Dispatches on extension: `.pgm` or raw with sidecar.
pub fn read_image(path: &Path) -> Result<GrayImage> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("pgm") => decode_pgm(&std::fs::read(path)?),
        Some("png") => Err(Error::Format("PNG input is not supported; convert to PGM".into())),
        _ => read_raw(path),
    }
}

/// `.pgm` gets clamped 8-bit grey levels, anything else raw `f64`.
pub fn write_image(path: &Path, img: &GrayImage) -> Result<()> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("pgm") => {
            std::fs::write(path, encode_pgm(img.width, img.height, &to_u8_clamped(&img.data)))?;
            Ok(())
        }
        _ => write_raw(path, img),
    }
}
