//! Binary channel dataset files.
//!
//! Layout, all little-endian: magic `CSIM`, version `u32`, `N_r` `u32`, `N_t`
//! `u32`, count `u64`, then `count` matrices, each row-major with interleaved
//! `f64` (re, im) pairs.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use chanest_core::{CMat, C64};

use crate::report::format_float;
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"CSIM";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 4 + 8;

/// Encodes matrices of a common shape.
pub fn encode(shape: (usize, usize), channels: &[CMat]) -> Result<Vec<u8>> {
    let (rows, cols) = shape;
    let too_big = |_| Error::Config("channel dimensions exceed u32".into());
    let mut out = Vec::with_capacity(HEADER_LEN + channels.len() * rows * cols * 16);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&u32::try_from(rows).map_err(too_big)?.to_le_bytes());
    out.extend_from_slice(&u32::try_from(cols).map_err(too_big)?.to_le_bytes());
    out.extend_from_slice(&(channels.len() as u64).to_le_bytes());
    for h in channels {
        if h.shape() != shape {
            return Err(chanest_core::Error::ShapeMismatch {
                context: "dataset encode",
                expected: shape,
                found: h.shape(),
            }
            .into());
        }
        for r in 0..rows {
            for c in 0..cols {
                out.extend_from_slice(&h[(r, c)].re.to_le_bytes());
                out.extend_from_slice(&h[(r, c)].im.to_le_bytes());
            }
        }
    }
    Ok(out)
}

/// Decodes a dataset; `path` only labels errors.
pub fn decode(bytes: &[u8], path: &Path) -> Result<((usize, usize), Vec<CMat>)> {
    let bad = |reason: String| Error::Format {
        path: path.to_path_buf(),
        reason,
    };
    if bytes.len() < HEADER_LEN {
        return Err(bad("truncated header".into()));
    }
    if &bytes[..4] != MAGIC {
        return Err(bad("bad magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let rows = u32_at(8) as usize;
    let cols = u32_at(12) as usize;
    let count = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let per = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(16))
        .ok_or_else(|| bad("header dimensions overflow".into()))?;
    let expected = usize::try_from(count)
        .ok()
        .and_then(|c| c.checked_mul(per))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| bad("header count overflows".into()))?;
    if bytes.len() != expected {
        return Err(bad(format!("expected {expected} bytes, found {}", bytes.len())));
    }
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let mut channels = Vec::with_capacity(count as usize);
    let mut offset = HEADER_LEN;
    for _ in 0..count {
        let mut h = CMat::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                h[(r, c)] = C64::new(f64_at(offset), f64_at(offset + 8));
                offset += 16;
            }
        }
        channels.push(h);
    }
    Ok(((rows, cols), channels))
}

pub fn write_dataset(path: &Path, shape: (usize, usize), channels: &[CMat]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let bytes = encode(shape, channels)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_dataset(path: &Path) -> Result<((usize, usize), Vec<CMat>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, path)
}

/// CSV export: one row per entry, columns `index,row,col,re,im`.
pub fn export_csv(path: &Path, channels: &[CMat]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "index,row,col,re,im").map_err(io)?;
    for (i, h) in channels.iter().enumerate() {
        for r in 0..h.nrows() {
            for c in 0..h.ncols() {
                let z = h[(r, c)];
                writeln!(w, "{i},{r},{c},{},{}", format_float(z.re), format_float(z.im)).map_err(io)?;
            }
        }
    }
    w.flush().map_err(io)
}
