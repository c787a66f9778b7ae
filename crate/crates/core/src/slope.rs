//! Sobel slope and break-line thresholding.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Raster};
use crate::raster::Dsm;

/// Default slope threshold in degrees.
pub const DEFAULT_SLOPE_THRESHOLD_DEG: f64 = 45.0;

/// Per-pixel slope in degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeMap {
    pub grid: GridSpec,
    pub slope_deg: Raster<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BreakMask {
    pub grid: GridSpec,
    pub is_break: Raster<bool>,
}

impl BreakMask {
    pub fn count(&self) -> usize {
        self.is_break.as_slice().iter().filter(|&&b| b).count()
    }
}

/// Sobel gradient of a surface, as rise over run along x (columns) and y (rows).
///
/// Borders use edge replication. The 3x3 responses are divided by `8 * cell`,
/// which makes the gradient exact on inclined planes.
pub fn sobel_gradient(elev: &Raster<f64>, cell: f64, row: usize, col: usize) -> (f64, f64) {
    let ncols = elev.ncols() as isize;
    let nrows = elev.nrows() as isize;
    let at = |dr: isize, dc: isize| -> f64 {
        let r = (row as isize + dr).clamp(0, nrows - 1) as usize;
        let c = (col as isize + dc).clamp(0, ncols - 1) as usize;
        *elev.get(r, c)
    };
    let gx = (at(-1, 1) + 2.0 * at(0, 1) + at(1, 1)) - (at(-1, -1) + 2.0 * at(0, -1) + at(1, -1));
    let gy = (at(1, -1) + 2.0 * at(1, 0) + at(1, 1)) - (at(-1, -1) + 2.0 * at(-1, 0) + at(-1, 1));
    let norm = 8.0 * cell;
    (gx / norm, gy / norm)
}

pub fn slope_map(dsm: &Dsm) -> Result<SlopeMap> {
    let (ncols, nrows) = (dsm.grid.ncols, dsm.grid.nrows);
    if ncols < 3 || nrows < 3 {
        return Err(Error::GridTooSmall { ncols, nrows });
    }
    let cell = dsm.grid.cell;
    let rows: Vec<Vec<f64>> = (0..nrows)
        .into_par_iter()
        .map(|r| {
            (0..ncols)
                .map(|c| {
                    let (gx, gy) = sobel_gradient(&dsm.elev, cell, r, c);
                    gx.hypot(gy).atan().to_degrees()
                })
                .collect()
        })
        .collect();
    Ok(SlopeMap {
        grid: dsm.grid,
        slope_deg: Raster::from_vec(ncols, nrows, rows.concat())?,
    })
}

/// Pixels steeper than `tau_deg` (strictly), with the outer ring forced on.
pub fn break_line_mask(slope: &SlopeMap, tau_deg: f64) -> Result<BreakMask> {
    if !(tau_deg > 0.0 && tau_deg < 90.0) {
        return Err(Error::BadThreshold(tau_deg));
    }
    let (ncols, nrows) = (slope.grid.ncols, slope.grid.nrows);
    let is_break = Raster::from_fn(ncols, nrows, |r, c| {
        r == 0 || c == 0 || r + 1 == nrows || c + 1 == ncols || *slope.slope_deg.get(r, c) > tau_deg
    });
    Ok(BreakMask {
        grid: slope.grid,
        is_break,
    })
}
