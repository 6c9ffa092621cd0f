//! Binary field snapshots.
//!
//! Layout (little-endian): magic `HLIM1` (5 bytes), `nx` (u64), `ny` (u64),
//! reality flag (u8, 0 or 1), time (f64), then `nx * ny` coefficients as
//! interleaved `(re, im)` f64 pairs. Rows run over ascending wavenumber
//! `k = -nx/2, ..., nx/2 - 1`; within a row the y-nodes run from y=0 to y=1.

use super::{Grid, GridSpec, SpectralField};
use crate::error::{HydroError, Result};
use ndarray::Array2;
use num_complex::Complex64;
use std::io::{Read, Write};
use std::sync::Arc;

pub const MAGIC: &[u8; 5] = b"HLIM1";

pub fn write_snapshot<W: Write>(mut w: W, field: &SpectralField, time: f64) -> Result<()> {
    let grid = field.grid();
    let (nx, ny) = (grid.nx(), grid.ny());
    w.write_all(MAGIC)?;
    w.write_all(&(nx as u64).to_le_bytes())?;
    w.write_all(&(ny as u64).to_le_bytes())?;
    w.write_all(&[field.is_real() as u8])?;
    w.write_all(&time.to_le_bytes())?;
    let half = nx as i64 / 2;
    for k in -half..half {
        let row = field.mode(k).expect("k in range");
        for c in row.iter() {
            w.write_all(&c.re.to_le_bytes())?;
            w.write_all(&c.im.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Read a snapshot. The returned field lives on a fresh grid with the stored
/// `nx, ny` and the given dealias fraction unless `grid` is supplied.
pub fn read_snapshot<R: Read>(
    mut r: R,
    grid: Option<&Arc<Grid>>,
) -> Result<(SpectralField, f64)> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(HydroError::Format("bad magic".into()));
    }
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let nx = u64::from_le_bytes(b8) as usize;
    r.read_exact(&mut b8)?;
    let ny = u64::from_le_bytes(b8) as usize;
    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)?;
    r.read_exact(&mut b8)?;
    let time = f64::from_le_bytes(b8);
    let grid = match grid {
        Some(g) => {
            if g.nx() != nx || g.ny() != ny {
                return Err(HydroError::Dimension(format!(
                    "snapshot is {nx}x{ny}, grid is {}x{}",
                    g.nx(),
                    g.ny()
                )));
            }
            g.clone()
        }
        None => Grid::new(GridSpec::new(nx, ny))?,
    };
    let mut coeffs = Array2::zeros((nx, ny));
    let half = nx as i64 / 2;
    for k in -half..half {
        let i = grid.index_of(k).expect("k in range");
        for j in 0..ny {
            r.read_exact(&mut b8)?;
            let re = f64::from_le_bytes(b8);
            r.read_exact(&mut b8)?;
            let im = f64::from_le_bytes(b8);
            coeffs[[i, j]] = Complex64::new(re, im);
        }
    }
    Ok((SpectralField::from_coeffs(&grid, coeffs, flag[0] != 0)?, time))
}
