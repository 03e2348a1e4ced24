//! File formats: binary and CSV frames, measurement files, PGM and CSV
//! images. All multi-byte fields are little-endian and every matrix is
//! stored one column (scan line) at a time.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::sensing::{Measurements, SignalDomain};
use crate::types::{BModeImage, RfFrame, SensingScheme};

pub const FRAME_MAGIC: &[u8; 4] = b"RFF1";
pub const MEASUREMENTS_MAGIC: &[u8; 4] = b"CSM1";

const FRAME_HEADER: usize = 16;
const MEASUREMENTS_HEADER: usize = 28;

fn is_csv(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn dim_u32(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Format(format!("{what}={v} does not fit in 32 bits")))
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

fn push_f64s(out: &mut Vec<u8>, m: &DMatrix<f64>) {
    for v in m.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn read_f64s(bytes: &[u8], rows: usize, cols: usize) -> DMatrix<f64> {
    let data: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    DMatrix::from_vec(rows, cols, data)
}

fn payload_len(rows: usize, cols: usize) -> Result<usize> {
    rows.checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| Error::Format(format!("{rows}x{cols} payload is too large")))
}

/// `RFF1` encoding of a frame.
pub fn frame_to_bytes(frame: &RfFrame) -> Result<Vec<u8>> {
    let (m, l) = frame.samples().shape();
    let mut out = Vec::with_capacity(FRAME_HEADER + 8 * m * l);
    out.extend_from_slice(FRAME_MAGIC);
    out.extend_from_slice(&dim_u32(m, "M")?.to_le_bytes());
    out.extend_from_slice(&dim_u32(l, "L")?.to_le_bytes());
    out.extend_from_slice(&[0; 4]);
    push_f64s(&mut out, frame.samples());
    Ok(out)
}

pub fn frame_from_bytes(bytes: &[u8]) -> Result<RfFrame> {
    if bytes.len() < FRAME_HEADER || &bytes[..4] != FRAME_MAGIC {
        return Err(Error::Format("not an RFF1 frame".into()));
    }
    let m = read_u32(bytes, 4) as usize;
    let l = read_u32(bytes, 8) as usize;
    if bytes[12..16] != [0; 4] {
        return Err(Error::Format("reserved header bytes are not zero".into()));
    }
    let need = payload_len(m, l)?;
    if bytes.len() - FRAME_HEADER != need {
        return Err(Error::Format(format!(
            "frame header says {m}x{l} ({need} bytes) but payload has {}",
            bytes.len() - FRAME_HEADER
        )));
    }
    RfFrame::new(read_f64s(&bytes[FRAME_HEADER..], m, l))
}

/// Writes a frame; `.csv` paths get the text format, anything else `RFF1`.
pub fn write_frame(path: &Path, frame: &RfFrame) -> Result<()> {
    if is_csv(path) {
        fs::write(path, matrix_to_csv(frame.samples()))?;
    } else {
        fs::write(path, frame_to_bytes(frame)?)?;
    }
    Ok(())
}

pub fn read_frame(path: &Path) -> Result<RfFrame> {
    if is_csv(path) {
        RfFrame::new(matrix_from_csv(&fs::read_to_string(path)?)?)
    } else {
        frame_from_bytes(&fs::read(path)?)
    }
}

/// `CSM1` encoding: magic, then N, M, L, seed, scheme id, domain id as
/// 32-bit fields, then `Y` column-major.
pub fn measurements_to_bytes(meas: &Measurements) -> Result<Vec<u8>> {
    let (n, l) = meas.y.shape();
    let mut out = Vec::with_capacity(MEASUREMENTS_HEADER + 8 * n * l);
    out.extend_from_slice(MEASUREMENTS_MAGIC);
    for v in [
        dim_u32(n, "N")?,
        dim_u32(meas.signal_len, "M")?,
        dim_u32(l, "L")?,
        meas.seed,
        meas.scheme.id(),
        meas.domain.id(),
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    push_f64s(&mut out, &meas.y);
    Ok(out)
}

pub fn measurements_from_bytes(bytes: &[u8]) -> Result<Measurements> {
    if bytes.len() < MEASUREMENTS_HEADER || &bytes[..4] != MEASUREMENTS_MAGIC {
        return Err(Error::Format("not a CSM1 measurement file".into()));
    }
    let n = read_u32(bytes, 4) as usize;
    let m = read_u32(bytes, 8) as usize;
    let l = read_u32(bytes, 12) as usize;
    let seed = read_u32(bytes, 16);
    let scheme = SensingScheme::from_id(read_u32(bytes, 20))?;
    let domain = SignalDomain::from_id(read_u32(bytes, 24))?;
    let need = payload_len(n, l)?;
    if bytes.len() - MEASUREMENTS_HEADER != need {
        return Err(Error::Format(format!(
            "header says {n}x{l} measurements ({need} bytes) but payload has {}",
            bytes.len() - MEASUREMENTS_HEADER
        )));
    }
    if n == 0 || n > m {
        return Err(Error::Format(format!("invalid operator shape {n}x{m}")));
    }
    Ok(Measurements {
        y: read_f64s(&bytes[MEASUREMENTS_HEADER..], n, l),
        signal_len: m,
        seed,
        scheme,
        domain,
    })
}

pub fn write_measurements(path: &Path, meas: &Measurements) -> Result<()> {
    fs::write(path, measurements_to_bytes(meas)?)?;
    Ok(())
}

pub fn read_measurements(path: &Path) -> Result<Measurements> {
    measurements_from_bytes(&fs::read(path)?)
}

/// Binary PGM (`P5`), width = lines, height = depth, pixel `round(255 v)`.
pub fn image_to_pgm(image: &BModeImage) -> Vec<u8> {
    let (h, w) = image.shape();
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    let px = image.pixels();
    for i in 0..h {
        for j in 0..w {
            out.push((px[(i, j)] * 255.0).round() as u8);
        }
    }
    out
}

pub fn image_from_pgm(bytes: &[u8]) -> Result<BModeImage> {
    let mut fields = Vec::with_capacity(4);
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("truncated PGM header".into()));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    if fields[0] != "P5" {
        return Err(Error::Format(format!("unsupported PGM type {}", fields[0])));
    }
    let parse = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::Format(format!("bad PGM header field {s:?}")))
    };
    let (w, h, maxval) = (parse(&fields[1])?, parse(&fields[2])?, parse(&fields[3])?);
    if maxval == 0 || maxval > 255 {
        return Err(Error::Format(format!("unsupported PGM maxval {maxval}")));
    }
    let data = bytes.get(pos..).unwrap_or(&[]);
    if data.len() != w * h {
        return Err(Error::Format(format!(
            "PGM is {w}x{h} but has {} pixel bytes",
            data.len()
        )));
    }
    let scale = maxval as f64;
    BModeImage::new(DMatrix::from_fn(h, w, |i, j| {
        data[i * w + j] as f64 / scale
    }))
}

pub fn write_image(path: &Path, image: &BModeImage) -> Result<()> {
    if is_csv(path) {
        fs::write(path, matrix_to_csv(image.pixels()))?;
    } else {
        fs::write(path, image_to_pgm(image))?;
    }
    Ok(())
}

pub fn read_image(path: &Path) -> Result<BModeImage> {
    if is_csv(path) {
        BModeImage::new(matrix_from_csv(&fs::read_to_string(path)?)?)
    } else {
        image_from_pgm(&fs::read(path)?)
    }
}

/// One text row per matrix row, comma separated, shortest round-trip
/// decimal representation.
pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format!("{:?}", m[(i, j)]));
        }
        out.push('\n');
    }
    out
}

pub fn matrix_from_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| {
                f.trim().parse::<f64>().map_err(|_| {
                    Error::Format(format!("line {}: bad number {:?}", lineno + 1, f.trim()))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Format(format!(
                    "line {} has {} fields, expected {}",
                    lineno + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Format("empty CSV matrix".into()));
    }
    let (h, w) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(h, w, |i, j| rows[i][j]))
}
