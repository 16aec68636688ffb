//! Binary field dumps: a 64-byte little-endian header followed by `u` then `v`
//! as row-major `f64`.
//!
//! | bytes  | content                         |
//! |--------|---------------------------------|
//! | 0..4   | magic `KSNP`                    |
//! | 4..6   | version (u16)                   |
//! | 6      | dimension (u8, 1 or 2)          |
//! | 7      | boundary (u8: 0 Neumann, 1 periodic) |
//! | 8..16  | points per axis (2 x u32)       |
//! | 16..24 | time (f64)                      |
//! | 24..56 | lo0, hi0, lo1, hi1 (f64)        |
//! | 56..60 | number of fields (u32, 2)       |
//! | 60..64 | reserved                        |

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{Boundary, Field, Grid, State};

pub const MAGIC: &[u8; 4] = b"KSNP";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 64;

pub fn encode(state: &State) -> Result<Vec<u8>> {
    let grid = state.grid();
    let dim = grid.dim();
    if dim > 2 {
        return Err(Error::Domain("snapshots hold one- or two-dimensional grids only".into()));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * grid.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(dim as u8);
    out.push(match grid.boundary() {
        Boundary::Neumann => 0,
        Boundary::Periodic => 1,
    });
    for axis in 0..2 {
        let n = if axis < dim { grid.n()[axis] as u32 } else { 0 };
        out.extend_from_slice(&n.to_le_bytes());
    }
    out.extend_from_slice(&state.t.to_le_bytes());
    for axis in 0..2 {
        let (lo, hi) = if axis < dim {
            (grid.lo()[axis], grid.hi()[axis])
        } else {
            (0.0, 0.0)
        };
        out.extend_from_slice(&lo.to_le_bytes());
        out.extend_from_slice(&hi.to_le_bytes());
    }
    out.extend_from_slice(&2u32.to_le_bytes());
    out.extend_from_slice(&[0u8; 4]);
    debug_assert_eq!(out.len(), HEADER_LEN);
    for x in state.u.values().iter().chain(state.v.values()) {
        out.extend_from_slice(&x.to_le_bytes());
    }
    Ok(out)
}

pub fn decode(bytes: &[u8], path: &Path) -> Result<State> {
    let bad = |m: String| Error::Snapshot {
        path: path.to_path_buf(),
        message: m,
    };
    if bytes.len() < HEADER_LEN {
        return Err(bad(format!("truncated header ({} bytes)", bytes.len())));
    }
    if &bytes[0..4] != MAGIC {
        return Err(bad("bad magic".into()));
    }
    let u16_at = |o: usize| u16::from_le_bytes(bytes[o..o + 2].try_into().unwrap());
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let version = u16_at(4);
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let dim = bytes[6] as usize;
    if !(1..=2).contains(&dim) {
        return Err(bad(format!("unsupported dimension {dim}")));
    }
    let boundary = match bytes[7] {
        0 => Boundary::Neumann,
        1 => Boundary::Periodic,
        b => return Err(bad(format!("unknown boundary code {b}"))),
    };
    let n: Vec<usize> = (0..dim).map(|a| u32_at(8 + 4 * a) as usize).collect();
    let t = f64_at(16);
    let lo: Vec<f64> = (0..dim).map(|a| f64_at(24 + 16 * a)).collect();
    let hi: Vec<f64> = (0..dim).map(|a| f64_at(32 + 16 * a)).collect();
    let nfields = u32_at(56);
    if nfields != 2 {
        return Err(bad(format!("expected 2 fields, found {nfields}")));
    }
    let grid = Arc::new(Grid::new(lo, hi, n, boundary).map_err(|e| bad(e.to_string()))?);
    let len = grid.len();
    let expected = HEADER_LEN + 16 * len;
    if bytes.len() != expected {
        return Err(bad(format!("expected {expected} bytes, found {}", bytes.len())));
    }
    let read = |k: usize| -> Vec<f64> {
        (0..len)
            .map(|i| f64_at(HEADER_LEN + 8 * (k * len + i)))
            .collect()
    };
    let u = Field::from_values(grid.clone(), read(0))?;
    let v = Field::from_values(grid, read(1))?;
    State::new(u, v, t)
}

pub fn write_snapshot(path: &Path, state: &State) -> Result<()> {
    let bytes = encode(state)?;
    let mut f = std::fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<State> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .map_err(|e| Error::Snapshot {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?
        .read_to_end(&mut bytes)?;
    decode(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let g = Arc::new(Grid::new(vec![-1.0, 0.0], vec![1.0, 3.0], vec![9, 12], Boundary::Periodic).unwrap());
        let u = Field::from_fn(g.clone(), |x| (x[0] * 7.1).sin() + x[1]);
        let v = Field::from_fn(g, |x| 1.0 / 3.0 + x[0] * x[1]);
        let s = State::new(u, v, 0.1 + 0.2).unwrap();
        let bytes = encode(&s).unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + 16 * 108);
        let back = decode(&bytes, Path::new("mem")).unwrap();
        assert_eq!(back.t.to_bits(), s.t.to_bits());
        assert_eq!(back.u, s.u);
        assert_eq!(back.v, s.v);
    }

    #[test]
    fn corrupt_input_rejected() {
        let g = Arc::new(Grid::cube(1, 0.0, 1.0, 10, Boundary::Neumann).unwrap());
        let s = State::new(Field::zeros(g.clone()), Field::zeros(g), 0.0).unwrap();
        let mut bytes = encode(&s).unwrap();
        assert!(decode(&bytes[..bytes.len() - 1], Path::new("x")).is_err());
        bytes[0] = b'X';
        assert!(matches!(decode(&bytes, Path::new("x")), Err(Error::Snapshot { .. })));
    }
}
