//! On-disk formats: lookup-table files and feature-vector files.
//!
//! Table file (little-endian):
//!
//! ```text
//! magic "HELR" | version u16 = 1 | k u32 | n u32 | delta u32 (16.16)
//! | theta i32 | s_max i32 | k*n*n cells i32, table-major then row-major
//! ```
//!
//! Feature-vector file (little-endian): `k u32` followed by rows of `k` f64.

use std::io::{Read, Write};
use std::path::Path;

use super::tables::{LookupTableSet, ScoreStep};
use crate::Error;

pub const TABLE_MAGIC: &[u8; 4] = b"HELR";
pub const TABLE_VERSION: u16 = 1;
pub const TABLE_HEADER_LEN: usize = 4 + 2 + 4 * 5;

pub fn encode_tables(t: &LookupTableSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(TABLE_HEADER_LEN + 4 * t.cells().len());
    out.extend_from_slice(TABLE_MAGIC);
    out.extend_from_slice(&TABLE_VERSION.to_le_bytes());
    out.extend_from_slice(&(t.k() as u32).to_le_bytes());
    out.extend_from_slice(&(t.n() as u32).to_le_bytes());
    out.extend_from_slice(&t.delta().raw().to_le_bytes());
    out.extend_from_slice(&t.theta().to_le_bytes());
    out.extend_from_slice(&t.s_max().to_le_bytes());
    for c in t.cells() {
        out.extend_from_slice(&c.to_le_bytes());
    }
    out
}

fn le_u32(b: &[u8]) -> u32 {
    u32::from_le_bytes(b.try_into().unwrap())
}

fn le_i32(b: &[u8]) -> i32 {
    i32::from_le_bytes(b.try_into().unwrap())
}

pub fn decode_tables(bytes: &[u8]) -> Result<LookupTableSet, Error> {
    if bytes.len() < TABLE_HEADER_LEN {
        return Err(Error::Decode("table file truncated"));
    }
    if &bytes[..4] != TABLE_MAGIC {
        return Err(Error::Decode("table file magic"));
    }
    if u16::from_le_bytes([bytes[4], bytes[5]]) != TABLE_VERSION {
        return Err(Error::Decode("table file version"));
    }
    let k = le_u32(&bytes[6..10]) as usize;
    let n = le_u32(&bytes[10..14]) as usize;
    let delta = ScoreStep::from_raw(le_u32(&bytes[14..18]))?;
    let theta = le_i32(&bytes[18..22]);
    let s_max = le_i32(&bytes[22..26]);
    let body = &bytes[TABLE_HEADER_LEN..];
    let expected = k
        .checked_mul(n)
        .and_then(|x| x.checked_mul(n))
        .and_then(|x| x.checked_mul(4))
        .ok_or(Error::Decode("table dimensions"))?;
    if body.len() != expected {
        return Err(Error::Decode("table file length"));
    }
    let cells = body.chunks_exact(4).map(le_i32).collect();
    LookupTableSet::from_cells(k, n, delta, cells)?.with_window(theta, s_max)
}

pub fn write_tables(path: impl AsRef<Path>, t: &LookupTableSet) -> Result<(), Error> {
    std::fs::File::create(path)?.write_all(&encode_tables(t))?;
    Ok(())
}

pub fn read_tables(path: impl AsRef<Path>) -> Result<LookupTableSet, Error> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_tables(&bytes)
}

pub fn encode_features(k: usize, rows: &[Vec<f64>]) -> Result<Vec<u8>, Error> {
    let mut out = Vec::with_capacity(4 + rows.len() * k * 8);
    out.extend_from_slice(&(k as u32).to_le_bytes());
    for row in rows {
        if row.len() != k {
            return Err(Error::LengthMismatch {
                expected: k,
                got: row.len(),
            });
        }
        for x in row {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_features(bytes: &[u8]) -> Result<(usize, Vec<Vec<f64>>), Error> {
    if bytes.len() < 4 {
        return Err(Error::Decode("feature file truncated"));
    }
    let k = le_u32(&bytes[..4]) as usize;
    if k == 0 {
        return Err(Error::Decode("feature file with k = 0"));
    }
    let body = &bytes[4..];
    if body.len() % (8 * k) != 0 {
        return Err(Error::Decode("feature file length"));
    }
    let rows = body
        .chunks_exact(8 * k)
        .map(|row| {
            row.chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                .collect()
        })
        .collect();
    Ok((k, rows))
}

pub fn write_features(path: impl AsRef<Path>, k: usize, rows: &[Vec<f64>]) -> Result<(), Error> {
    std::fs::File::create(path)?.write_all(&encode_features(k, rows)?)?;
    Ok(())
}

pub fn read_features(path: impl AsRef<Path>) -> Result<(usize, Vec<Vec<f64>>), Error> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_features(&bytes)
}
