//! Binary field snapshots.
//!
//! Layout (all little-endian):
//!
//! | offset | size | content                               |
//! |--------|------|---------------------------------------|
//! | 0      | 8    | magic `b"GKDVSNAP"`                   |
//! | 8      | 4    | format version, `u32` (currently 1)   |
//! | 12     | 8    | mode count `M`, `u64`                 |
//! | 20     | 8    | box length `L`, `f64`                 |
//! | 28     | 8    | time `t`, `f64`                       |
//! | 36     | 1    | representation, 0 physical/1 spectral |
//! | 37     | 1    | real-valued flag, 0 or 1              |
//! | 38     | 16M  | `M` pairs `(re, im)` of `f64`         |

use std::io::{Read, Write};

use num_complex::Complex64;

use super::{Field, Grid, Repr};
use crate::error::{GkdvError, Result};

pub const MAGIC: &[u8; 8] = b"GKDVSNAP";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 38;

pub fn write_snapshot<W: Write>(mut w: W, field: &Field, t: f64) -> Result<()> {
    let grid = field.grid();
    let mut buf = Vec::with_capacity(HEADER_LEN + 16 * grid.modes());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(grid.modes() as u64).to_le_bytes());
    buf.extend_from_slice(&grid.box_length().to_le_bytes());
    buf.extend_from_slice(&t.to_le_bytes());
    buf.push(match field.repr() {
        Repr::Physical => 0,
        Repr::Spectral => 1,
    });
    buf.push(field.is_real_valued() as u8);
    for c in field.raw() {
        buf.extend_from_slice(&c.re.to_le_bytes());
        buf.extend_from_slice(&c.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Header fields of a snapshot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnapshotHeader {
    pub modes: u64,
    pub box_length: f64,
    pub time: f64,
    pub repr: Repr,
    pub real_valued: bool,
}

pub fn read_header(bytes: &[u8]) -> Result<SnapshotHeader> {
    if bytes.len() < HEADER_LEN {
        return Err(GkdvError::SnapshotFormat(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[0..8] != MAGIC {
        return Err(GkdvError::SnapshotFormat("bad magic".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != VERSION {
        return Err(GkdvError::SnapshotFormat(format!("unsupported version {version}")));
    }
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let repr = match bytes[36] {
        0 => Repr::Physical,
        1 => Repr::Spectral,
        r => return Err(GkdvError::SnapshotFormat(format!("unknown representation tag {r}"))),
    };
    let real_valued = match bytes[37] {
        0 => false,
        1 => true,
        r => return Err(GkdvError::SnapshotFormat(format!("bad real-valued flag {r}"))),
    };
    Ok(SnapshotHeader {
        modes: u64::from_le_bytes(bytes[12..20].try_into().unwrap()),
        box_length: f64_at(20),
        time: f64_at(28),
        repr,
        real_valued,
    })
}

/// Reads a snapshot onto a default grid for its `(L, M)`.
pub fn read_snapshot<R: Read>(r: R) -> Result<(Field, f64)> {
    read_snapshot_with(r, None)
}

/// Reads a snapshot; when `grid` is supplied its `(L, M)` must match.
pub fn read_snapshot_with<R: Read>(mut r: R, grid: Option<&Grid>) -> Result<(Field, f64)> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let header = read_header(&bytes)?;
    let m = header.modes as usize;
    if bytes.len() != HEADER_LEN + 16 * m {
        return Err(GkdvError::SnapshotFormat(format!(
            "expected {} bytes for M = {m}, found {}",
            HEADER_LEN + 16 * m,
            bytes.len()
        )));
    }
    let grid = match grid {
        Some(g) if g.modes() == m && g.box_length() == header.box_length => g.clone(),
        Some(g) => {
            return Err(GkdvError::GridMismatch(format!(
                "snapshot has (L, M) = ({}, {m}), grid has ({}, {})",
                header.box_length,
                g.box_length(),
                g.modes()
            )))
        }
        None => Grid::new(header.box_length, m)?,
    };
    let values: Vec<Complex64> = bytes[HEADER_LEN..]
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[0..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..16].try_into().unwrap()),
            )
        })
        .collect();
    let field = match header.repr {
        Repr::Physical => Field::from_physical(&grid, values, header.real_valued)?,
        Repr::Spectral => Field::from_spectral(&grid, values, header.real_valued)?,
    };
    Ok((field, header.time))
}
