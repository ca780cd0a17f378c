//! Field export: CSV triples and the binary `WIGF` dump.
//!
//! A `WIGF` file is a 32-byte little-endian header followed by the values
//! row-major (`x` outer, `p` inner) as `f64`:
//!
//! | bytes | content                    |
//! |-------|----------------------------|
//! | 0..4  | magic `WIGF`               |
//! | 4..6  | version (`u16`, currently 1) |
//! | 6     | `log2 n_x` (`u8`)          |
//! | 7     | `log2 n_p` (`u8`)          |
//! | 8..16 | `x_min`                    |
//! | 16..24| `x_max`                    |
//! | 24..32| `hbar`                     |
//!
//! The mass is not stored; readers supply it.

use std::io::{Read, Write};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, PhaseField};

pub const WIGF_MAGIC: &[u8; 4] = b"WIGF";
pub const WIGF_VERSION: u16 = 1;
pub const WIGF_HEADER_LEN: usize = 32;

pub fn write_wigf(field: &PhaseField, mut out: impl Write) -> Result<()> {
    let g = field.grid();
    let mut header = Vec::with_capacity(WIGF_HEADER_LEN);
    header.extend_from_slice(WIGF_MAGIC);
    header.extend_from_slice(&WIGF_VERSION.to_le_bytes());
    header.push(g.n_x.trailing_zeros() as u8);
    header.push(g.n_p.trailing_zeros() as u8);
    for v in [g.x_min, g.x_max, g.hbar] {
        header.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&header)?;
    let mut body = Vec::with_capacity(8 * g.n_x * g.n_p);
    for v in field.values().iter() {
        body.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&body)?;
    Ok(())
}

pub fn read_wigf(mut input: impl Read, mass: f64) -> Result<PhaseField> {
    let mut header = [0u8; WIGF_HEADER_LEN];
    input.read_exact(&mut header)?;
    if &header[..4] != WIGF_MAGIC {
        return Err(Error::Format("missing WIGF magic".into()));
    }
    let version = u16::from_le_bytes([header[4], header[5]]);
    if version != WIGF_VERSION {
        return Err(Error::Format(format!("unsupported WIGF version {version}")));
    }
    let (lx, lp) = (header[6], header[7]);
    if lx >= 32 || lp >= 32 {
        return Err(Error::Format("grid size out of range".into()));
    }
    let f = |k: usize| f64::from_le_bytes(header[k..k + 8].try_into().expect("8 bytes"));
    let (x_min, x_max, hbar) = (f(8), f(16), f(24));
    let grid = GridSpec::new(x_min, x_max, 1 << lx, hbar, mass)?;
    let n_p = 1usize << lp;
    if n_p != grid.n_p {
        return Err(Error::Format(format!("n_p = {n_p} differs from n_x = {}", grid.n_x)));
    }
    let mut body = vec![0u8; 8 * grid.n_x * n_p];
    input.read_exact(&mut body)?;
    let values: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let values = Array2::from_shape_vec((grid.n_x, n_p), values).expect("shape matches length");
    PhaseField::new(grid, values)
}

/// One `x,p,value` line per grid point, with a header line.
pub fn write_field_csv(field: &PhaseField, mut out: impl Write) -> Result<()> {
    let g = field.grid();
    let mut buf = String::from("x,p,w\n");
    for ((i, j), v) in field.values().indexed_iter() {
        buf.push_str(&format!("{},{},{}\n", g.x(i), g.p(j), v));
    }
    out.write_all(buf.as_bytes())?;
    Ok(())
}
