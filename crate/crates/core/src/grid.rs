//! Regular grid geometry and a dense row-major raster container.
//!
//! Row 0 is the southernmost row: a point at `(x, y)` falls into
//! `row = floor((y - origin_y) / cell)`, `col = floor((x - origin_x) / cell)`.
//! Writers that need north-up order (ESRI ASCII) flip rows on output.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::BBox;

/// Placement and shape of a regular grid in a projected metric CRS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    /// Lower-left corner, meters.
    pub origin_x: f64,
    pub origin_y: f64,
    /// Cell edge length, meters.
    pub cell: f64,
    pub ncols: usize,
    pub nrows: usize,
}

impl GridSpec {
    pub fn new(
        origin_x: f64,
        origin_y: f64,
        cell: f64,
        ncols: usize,
        nrows: usize,
    ) -> Result<Self> {
        if !(cell.is_finite() && cell > 0.0) {
            return Err(Error::NonPositiveCell(cell));
        }
        if ncols == 0 || nrows == 0 {
            return Err(Error::InvalidParameter(format!(
                "grid must have at least one cell, got {ncols}x{nrows}"
            )));
        }
        Ok(GridSpec {
            origin_x,
            origin_y,
            cell,
            ncols,
            nrows,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.ncols * self.nrows
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.ncols + col
    }

    /// Center of the cell at `(row, col)`.
    pub fn cell_center(&self, row: usize, col: usize) -> (f64, f64) {
        (
            self.origin_x + (col as f64 + 0.5) * self.cell,
            self.origin_y + (row as f64 + 0.5) * self.cell,
        )
    }

    /// Area of one cell in square meters.
    pub fn cell_area(&self) -> f64 {
        self.cell * self.cell
    }

    pub fn bbox(&self) -> BBox {
        BBox {
            min_x: self.origin_x,
            min_y: self.origin_y,
            max_x: self.origin_x + self.ncols as f64 * self.cell,
            max_y: self.origin_y + self.nrows as f64 * self.cell,
        }
    }

    /// Cell containing `(x, y)`; points on the max edge are clamped into the last row/col.
    pub fn locate(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let fx = (x - self.origin_x) / self.cell;
        let fy = (y - self.origin_y) / self.cell;
        let col = clamp_edge(fx, self.ncols)?;
        let row = clamp_edge(fy, self.nrows)?;
        Some((row, col))
    }

    /// Whether two specs describe the same grid.
    pub fn same_as(&self, other: &GridSpec) -> bool {
        self.ncols == other.ncols
            && self.nrows == other.nrows
            && approx_eq(self.cell, other.cell)
            && approx_eq(self.origin_x, other.origin_x)
            && approx_eq(self.origin_y, other.origin_y)
    }

    pub fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{}x{} @ ({}, {}) cell {} vs {}x{} @ ({}, {}) cell {}",
                self.ncols,
                self.nrows,
                self.origin_x,
                self.origin_y,
                self.cell,
                other.ncols,
                other.nrows,
                other.origin_x,
                other.origin_y,
                other.cell
            )))
        }
    }

    /// Sub-grid of cells whose centers fall inside `bbox`, with the column/row offset of the window.
    pub fn crop_window(&self, bbox: &BBox) -> Option<(GridSpec, usize, usize)> {
        let c0 = ((bbox.min_x - self.origin_x) / self.cell - 0.5)
            .ceil()
            .max(0.0) as usize;
        let r0 = ((bbox.min_y - self.origin_y) / self.cell - 0.5)
            .ceil()
            .max(0.0) as usize;
        let c1 = ((bbox.max_x - self.origin_x) / self.cell - 0.5).floor();
        let r1 = ((bbox.max_y - self.origin_y) / self.cell - 0.5).floor();
        if c1 < 0.0 || r1 < 0.0 {
            return None;
        }
        let c1 = (c1 as usize).min(self.ncols - 1);
        let r1 = (r1 as usize).min(self.nrows - 1);
        if c0 > c1 || r0 > r1 {
            return None;
        }
        let spec = GridSpec {
            origin_x: self.origin_x + c0 as f64 * self.cell,
            origin_y: self.origin_y + r0 as f64 * self.cell,
            cell: self.cell,
            ncols: c1 - c0 + 1,
            nrows: r1 - r0 + 1,
        };
        Some((spec, c0, r0))
    }
}

fn clamp_edge(f: f64, n: usize) -> Option<usize> {
    if !f.is_finite() || f < 0.0 {
        return None;
    }
    let i = f.floor() as usize;
    if i < n {
        Some(i)
    } else if f <= n as f64 {
        Some(n - 1)
    } else {
        None
    }
}

fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

/// Dense row-major raster.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster<T> {
    ncols: usize,
    nrows: usize,
    data: Vec<T>,
}

impl<T: Clone> Raster<T> {
    pub fn filled(ncols: usize, nrows: usize, value: T) -> Self {
        Raster {
            ncols,
            nrows,
            data: vec![value; ncols * nrows],
        }
    }

    /// Copies the window starting at `(row0, col0)` with the given shape.
    pub fn window(&self, col0: usize, row0: usize, ncols: usize, nrows: usize) -> Raster<T> {
        let mut data = Vec::with_capacity(ncols * nrows);
        for r in row0..row0 + nrows {
            let start = r * self.ncols + col0;
            data.extend_from_slice(&self.data[start..start + ncols]);
        }
        Raster { ncols, nrows, data }
    }
}

impl<T> Raster<T> {
    pub fn from_vec(ncols: usize, nrows: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != ncols * nrows {
            return Err(Error::GridMismatch(format!(
                "buffer of {} values for a {ncols}x{nrows} raster",
                data.len()
            )));
        }
        Ok(Raster { ncols, nrows, data })
    }

    pub fn from_fn(ncols: usize, nrows: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(ncols * nrows);
        for r in 0..nrows {
            for c in 0..ncols {
                data.push(f(r, c));
            }
        }
        Raster { ncols, nrows, data }
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> &T {
        &self.data[row * self.ncols + col]
    }

    #[inline]
    pub fn get_mut(&mut self, row: usize, col: usize) -> &mut T {
        &mut self.data[row * self.ncols + col]
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, row: usize) -> &[T] {
        &self.data[row * self.ncols..(row + 1) * self.ncols]
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Raster<U> {
        Raster {
            ncols: self.ncols,
            nrows: self.nrows,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn same_shape<U>(&self, other: &Raster<U>) -> bool {
        self.ncols == other.ncols && self.nrows == other.nrows
    }

    /// Whether the raster matches the shape of `spec`.
    pub fn fits(&self, spec: &GridSpec) -> bool {
        self.ncols == spec.ncols && self.nrows == spec.nrows
    }
}

impl<T> std::ops::Index<usize> for Raster<T> {
    type Output = T;

    #[inline]
    fn index(&self, i: usize) -> &T {
        &self.data[i]
    }
}

impl<T> std::ops::IndexMut<usize> for Raster<T> {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.data[i]
    }
}

/// Visits the in-bounds 4-neighbours of a flat index.
#[inline]
pub(crate) fn for_each_neighbor4(idx: usize, ncols: usize, nrows: usize, mut f: impl FnMut(usize)) {
    let r = idx / ncols;
    let c = idx % ncols;
    if r > 0 {
        f(idx - ncols);
    }
    if c > 0 {
        f(idx - 1);
    }
    if c + 1 < ncols {
        f(idx + 1);
    }
    if r + 1 < nrows {
        f(idx + ncols);
    }
}
