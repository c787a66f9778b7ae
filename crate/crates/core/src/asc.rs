//! ESRI ASCII grid reading and writing.
//!
//! Output is byte-deterministic: six header lines, then `nrows` lines of
//! `ncols` values printed with six decimals, north row first. Non-finite
//! cells are written as the literal `-9999`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Raster};

pub const NODATA: f64 = -9999.0;
const NODATA_TOKEN: &str = "-9999";

pub fn write_ascii_grid<W: Write>(grid: &GridSpec, values: &Raster<f64>, out: W) -> Result<()> {
    if !values.fits(grid) {
        return Err(Error::GridMismatch(format!(
            "raster {}x{} vs grid {}x{}",
            values.ncols(),
            values.nrows(),
            grid.ncols,
            grid.nrows
        )));
    }
    let mut out = BufWriter::new(out);
    writeln!(out, "ncols {}", grid.ncols)?;
    writeln!(out, "nrows {}", grid.nrows)?;
    writeln!(out, "xllcorner {}", grid.origin_x)?;
    writeln!(out, "yllcorner {}", grid.origin_y)?;
    writeln!(out, "cellsize {}", grid.cell)?;
    writeln!(out, "NODATA_value {NODATA_TOKEN}")?;
    let mut line = String::new();
    for r in (0..grid.nrows).rev() {
        line.clear();
        for (c, &v) in values.row(r).iter().enumerate() {
            if c > 0 {
                line.push(' ');
            }
            if v.is_finite() {
                use std::fmt::Write as _;
                // Avoid printing "-0.000000" for tiny negatives.
                let v = if v.abs() < 5e-7 { 0.0 } else { v };
                write!(line, "{v:.6}").expect("writing to a String");
            } else {
                line.push_str(NODATA_TOKEN);
            }
        }
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_ascii_grid_file(path: &Path, grid: &GridSpec, values: &Raster<f64>) -> Result<()> {
    write_ascii_grid(grid, values, File::create(path)?)
}

/// Writes a boolean raster as 1/0 values.
pub fn write_mask_file(path: &Path, grid: &GridSpec, mask: &Raster<bool>) -> Result<()> {
    write_ascii_grid_file(path, grid, &mask.map(|&b| if b { 1.0 } else { 0.0 }))
}

/// Reads a grid; nodata cells become NaN.
pub fn read_ascii_grid<R: Read>(input: R) -> Result<(GridSpec, Raster<f64>)> {
    let reader = BufReader::new(input);
    let mut ncols = None;
    let mut nrows = None;
    let mut x = None;
    let mut y = None;
    let mut centered = false;
    let mut cell = None;
    let mut nodata = NODATA;
    let mut tokens: Vec<String> = Vec::new();
    let mut in_header = true;

    for line in reader.lines() {
        let line = line?;
        if in_header {
            let mut parts = line.split_whitespace();
            let Some(key) = parts.next() else { continue };
            if key.parse::<f64>().is_err() {
                let value = parts
                    .next()
                    .ok_or_else(|| Error::HeaderMismatch(format!("missing value for {key}")))?;
                let num = || -> Result<f64> {
                    value.parse::<f64>().map_err(|_| {
                        Error::HeaderMismatch(format!("bad value {value:?} for {key}"))
                    })
                };
                match key.to_ascii_lowercase().as_str() {
                    "ncols" => ncols = Some(num()? as usize),
                    "nrows" => nrows = Some(num()? as usize),
                    "xllcorner" => x = Some(num()?),
                    "yllcorner" => y = Some(num()?),
                    "xllcenter" => {
                        x = Some(num()?);
                        centered = true;
                    }
                    "yllcenter" => {
                        y = Some(num()?);
                        centered = true;
                    }
                    "cellsize" => cell = Some(num()?),
                    "nodata_value" => nodata = num()?,
                    other => {
                        return Err(Error::HeaderMismatch(format!(
                            "unknown header key {other:?}"
                        )))
                    }
                }
                continue;
            }
            in_header = false;
        }
        tokens.extend(line.split_whitespace().map(str::to_owned));
    }

    let missing = |k: &str| Error::HeaderMismatch(format!("missing {k}"));
    let ncols = ncols.ok_or_else(|| missing("ncols"))?;
    let nrows = nrows.ok_or_else(|| missing("nrows"))?;
    let cell = cell.ok_or_else(|| missing("cellsize"))?;
    let (mut x, mut y) = (
        x.ok_or_else(|| missing("xllcorner"))?,
        y.ok_or_else(|| missing("yllcorner"))?,
    );
    if centered {
        x -= cell / 2.0;
        y -= cell / 2.0;
    }
    let grid = GridSpec::new(x, y, cell, ncols, nrows)?;
    if tokens.len() != ncols * nrows {
        return Err(Error::HeaderMismatch(format!(
            "expected {} values for {ncols}x{nrows}, found {}",
            ncols * nrows,
            tokens.len()
        )));
    }
    let mut values = Raster::filled(ncols, nrows, f64::NAN);
    for (k, tok) in tokens.iter().enumerate() {
        let v: f64 = tok
            .parse()
            .map_err(|_| Error::HeaderMismatch(format!("bad cell value {tok:?}")))?;
        // File rows run north to south.
        let r = nrows - 1 - k / ncols;
        let c = k % ncols;
        *values.get_mut(r, c) = if v == nodata { f64::NAN } else { v };
    }
    Ok((grid, values))
}

pub fn read_ascii_grid_file(path: &Path) -> Result<(GridSpec, Raster<f64>)> {
    read_ascii_grid(File::open(path)?)
}
