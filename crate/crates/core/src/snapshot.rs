//! Binary field snapshots and trajectories. Layout is documented in
//! `docs/FORMATS.md`.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{NsgError, Result};
use crate::field::{SpectralField, VelocityField};
use crate::grid::Grid;

pub const MAGIC: &[u8; 8] = b"NSGFLD01";
pub const HEADER_LEN: usize = 32;

/// Append one snapshot record.
pub fn write_snapshot<W: Write>(w: &mut W, field: &SpectralField, time: f64) -> Result<()> {
    let g = field.grid();
    let mut header = Vec::with_capacity(HEADER_LEN);
    header.extend_from_slice(MAGIC);
    for v in [g.dim() as u32, g.n() as u32, field.components() as u32, 0u32] {
        header.extend_from_slice(&v.to_le_bytes());
    }
    header.extend_from_slice(&time.to_le_bytes());
    w.write_all(&header)?;
    let mut body = Vec::with_capacity(field.coeffs().len() * 16);
    for c in field.coeffs() {
        body.extend_from_slice(&c.re.to_le_bytes());
        body.extend_from_slice(&c.im.to_le_bytes());
    }
    w.write_all(&body)?;
    Ok(())
}

/// Read one record; `Ok(None)` on a clean end of stream.
pub fn read_snapshot<R: Read>(r: &mut R) -> Result<Option<(f64, SpectralField)>> {
    let mut header = [0u8; HEADER_LEN];
    let mut got = 0;
    while got < HEADER_LEN {
        let k = r.read(&mut header[got..])?;
        if k == 0 {
            break;
        }
        got += k;
    }
    if got == 0 {
        return Ok(None);
    }
    if got < HEADER_LEN {
        return Err(NsgError::Format("truncated snapshot header".into()));
    }
    if &header[..8] != MAGIC {
        return Err(NsgError::Format("bad snapshot magic".into()));
    }
    let word = |i: usize| u32::from_le_bytes(header[8 + 4 * i..12 + 4 * i].try_into().unwrap()) as usize;
    let (dim, n, components, reserved) = (word(0), word(1), word(2), word(3));
    if reserved != 0 {
        return Err(NsgError::Format("nonzero reserved header word".into()));
    }
    let grid = Grid::new(dim, n).map_err(|e| NsgError::Format(e.to_string()))?;
    if components == 0 || components > 3 {
        return Err(NsgError::Format(format!("unsupported component count {components}")));
    }
    let time = f64::from_le_bytes(header[24..32].try_into().unwrap());
    let count = grid.len() * components;
    let mut body = vec![0u8; count * 16];
    r.read_exact(&mut body).map_err(|_| NsgError::Format("truncated snapshot body".into()))?;
    let coeffs = body
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    Ok(Some((time, SpectralField::from_coeffs(grid, components, coeffs)?)))
}

pub fn write_trajectory<W: Write>(w: &mut W, times: &[f64], fields: &[VelocityField]) -> Result<()> {
    for (t, f) in times.iter().zip(fields) {
        write_snapshot(w, f, *t)?;
    }
    Ok(())
}

/// All records of a trajectory file as divergence-free velocity fields.
pub fn read_trajectory<R: Read>(r: &mut R) -> Result<(Vec<f64>, Vec<VelocityField>)> {
    let mut times = Vec::new();
    let mut fields = Vec::new();
    while let Some((t, f)) = read_snapshot(r)? {
        if let Some(first) = fields.first().map(|u: &VelocityField| *u.grid()) {
            if first != *f.grid() {
                return Err(NsgError::Format("trajectory mixes grids".into()));
            }
        }
        if f.components() != f.grid().dim() {
            return Err(NsgError::Format("trajectory record is not a velocity field".into()));
        }
        times.push(t);
        fields.push(VelocityField::new(f).map_err(|e| NsgError::Format(e.to_string()))?);
    }
    if times.is_empty() {
        return Err(NsgError::Format("empty trajectory".into()));
    }
    Ok((times, fields))
}
