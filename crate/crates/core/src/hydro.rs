//! Water-body detection from return density.
//!
//! Water absorbs near-infrared pulses, so water pixels sit in windows with
//! far fewer occupied cells than the scan average. With `P` the fraction of
//! occupied cells and `N` the window size, the occupied count of a window is
//! modeled as binomial `B(N, P/2)` (halved to absorb overlap imbalance) and a
//! pixel is water when its window count falls below the lower bound
//! `mean - k * sd` of the normal approximation.

use std::collections::VecDeque;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{for_each_neighbor4, GridSpec, Raster};
use crate::groundfilter::{component_pixels, label_components};
use crate::interp::{DtmRaster, PixelSource};
use crate::raster::SparseDsm;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaterParams {
    /// Odd window edge in pixels.
    pub window: usize,
    /// Confidence multiplier on the standard deviation.
    pub k: f64,
    /// Quantile used for segment elevation.
    pub percentile: f64,
    /// Segments smaller than this are discarded.
    pub min_segment_px: usize,
}

impl Default for WaterParams {
    fn default() -> Self {
        WaterParams {
            window: 9,
            k: 4.0,
            percentile: 0.10,
            min_segment_px: 0,
        }
    }
}

impl WaterParams {
    pub fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "water window must be odd and >= 3, got {}",
                self.window
            )));
        }
        if !(self.k >= 0.0 && self.k.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "confidence multiplier must be >= 0, got {}",
                self.k
            )));
        }
        if !(self.percentile > 0.0 && self.percentile < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "percentile must lie in (0, 1), got {}",
                self.percentile
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaterSegment {
    pub id: u32,
    /// Flat pixel indices, row-major.
    pub pixels: Vec<usize>,
    pub elevation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaterMap {
    pub grid: GridSpec,
    pub is_water: Raster<bool>,
    pub segments: Vec<WaterSegment>,
}

impl WaterMap {
    pub fn water_count(&self) -> usize {
        self.is_water.as_slice().iter().filter(|&&w| w).count()
    }
}

/// Fraction of cells holding at least one return.
pub fn occupied_fraction(occupancy: &Raster<u32>) -> f64 {
    if occupancy.is_empty() {
        return 0.0;
    }
    let occupied = occupancy.as_slice().iter().filter(|&&n| n > 0).count();
    occupied as f64 / occupancy.len() as f64
}

/// Lower confidence bound on the occupied count of an `n`-cell window.
pub fn threshold_for(density: f64, n: usize, k: f64) -> u32 {
    let p = density / 2.0;
    let n = n as f64;
    let mean = n * p;
    let sd = (n * p * (1.0 - p)).sqrt();
    let t = (mean - k * sd).floor();
    if t.is_finite() && t > 0.0 {
        t as u32
    } else {
        0
    }
}

pub fn water_threshold(occupancy: &Raster<u32>, wp: &WaterParams) -> u32 {
    threshold_for(occupied_fraction(occupancy), wp.window * wp.window, wp.k)
}

/// Summed-area table of occupied cells with a zero guard row and column.
fn occupied_integral(occupancy: &Raster<u32>) -> Vec<u64> {
    let w = occupancy.ncols() + 1;
    let mut sat = vec![0u64; w * (occupancy.nrows() + 1)];
    for r in 0..occupancy.nrows() {
        let mut run = 0u64;
        for (c, &n) in occupancy.row(r).iter().enumerate() {
            run += u64::from(n > 0);
            sat[(r + 1) * w + c + 1] = sat[r * w + c + 1] + run;
        }
    }
    sat
}

/// Number of occupied cells in the `window`-sized square centered on each
/// pixel, clipped at the raster edge, alongside the visible cell count.
pub fn window_counts(occupancy: &Raster<u32>, window: usize) -> Raster<(u32, u32)> {
    let ncols = occupancy.ncols();
    let nrows = occupancy.nrows();
    let half = window / 2;
    let sat = occupied_integral(occupancy);
    let w = ncols + 1;
    let rows: Vec<Vec<(u32, u32)>> = (0..nrows)
        .into_par_iter()
        .map(|r| {
            let r0 = r.saturating_sub(half);
            let r1 = (r + half + 1).min(nrows);
            (0..ncols)
                .map(|c| {
                    let c0 = c.saturating_sub(half);
                    let c1 = (c + half + 1).min(ncols);
                    let sum =
                        sat[r1 * w + c1] + sat[r0 * w + c0] - sat[r0 * w + c1] - sat[r1 * w + c0];
                    (sum as u32, ((r1 - r0) * (c1 - c0)) as u32)
                })
                .collect()
        })
        .collect();
    Raster::from_vec(ncols, nrows, rows.concat()).expect("row lengths match")
}

/// Pixels whose window holds fewer than `t` occupied cells.
///
/// Windows clipped by the raster edge compare against `ceil(t * visible / N)`.
pub fn water_mask(occupancy: &Raster<u32>, t: u32, window: usize) -> Raster<bool> {
    let n = (window * window) as u64;
    window_counts(occupancy, window).map(|&(sum, visible)| {
        let limit = if u64::from(visible) == n {
            u64::from(t)
        } else {
            (u64::from(t) * u64::from(visible)).div_ceil(n)
        };
        u64::from(sum) < limit
    })
}

/// Order statistic at 1-based index `ceil(q * n)` of the ascending values.
pub fn nearest_rank(values: &mut [f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    // The epsilon keeps exact products such as 0.1 * 30 from rounding up.
    let rank = ((q * n as f64) - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    Some(values[rank - 1])
}

/// Elevations of the occupied cells in the first BFS ring around `pixels`
/// that contains any.
fn nearest_ring_elevations(pixels: &[usize], sparse: &SparseDsm) -> Vec<f64> {
    let ncols = sparse.grid.ncols;
    let nrows = sparse.grid.nrows;
    let mut seen = vec![false; ncols * nrows];
    let mut frontier: VecDeque<usize> = VecDeque::new();
    for &i in pixels {
        seen[i] = true;
        frontier.push_back(i);
    }
    loop {
        let mut next = VecDeque::new();
        let mut found = Vec::new();
        while let Some(i) = frontier.pop_front() {
            for_each_neighbor4(i, ncols, nrows, |j| {
                if !seen[j] {
                    seen[j] = true;
                    if let Some(z) = sparse.elev[j] {
                        found.push(z);
                    }
                    next.push_back(j);
                }
            });
        }
        if !found.is_empty() || next.is_empty() {
            return found;
        }
        frontier = next;
    }
}

/// Groups water pixels into 4-connected segments and assigns each an elevation.
pub fn water_segments(
    mask: &Raster<bool>,
    sparse: &SparseDsm,
    wp: &WaterParams,
) -> Result<WaterMap> {
    if !mask.fits(&sparse.grid) {
        return Err(Error::GridMismatch(format!(
            "water mask {}x{} vs grid {}x{}",
            mask.ncols(),
            mask.nrows(),
            sparse.grid.ncols,
            sparse.grid.nrows
        )));
    }
    let (labels, count) = label_components(mask);
    let kept: Vec<Vec<usize>> = component_pixels(&labels, count)
        .into_iter()
        .filter(|px| px.len() >= wp.min_segment_px)
        .collect();

    let segments: Vec<WaterSegment> = kept
        .into_par_iter()
        .enumerate()
        .map(|(k, pixels)| {
            let mut inside: Vec<f64> = pixels.iter().filter_map(|&i| sparse.elev[i]).collect();
            let elevation = if inside.is_empty() {
                nearest_rank(&mut nearest_ring_elevations(&pixels, sparse), wp.percentile)
            } else {
                nearest_rank(&mut inside, wp.percentile)
            };
            WaterSegment {
                id: k as u32 + 1,
                pixels,
                elevation,
            }
        })
        .collect();

    let mut is_water = Raster::filled(mask.ncols(), mask.nrows(), false);
    for s in &segments {
        for &i in &s.pixels {
            is_water[i] = true;
        }
    }
    Ok(WaterMap {
        grid: sparse.grid,
        is_water,
        segments,
    })
}

/// Flattens every water segment to its elevation.
pub fn apply_water(dtm: &DtmRaster, water: &WaterMap) -> Result<DtmRaster> {
    dtm.grid.check_same(&water.grid)?;
    let mut out = dtm.clone();
    for s in &water.segments {
        for &i in &s.pixels {
            if let Some(z) = s.elevation {
                out.elev[i] = z;
            }
            out.source[i] = PixelSource::Water;
        }
    }
    Ok(out)
}

/// CSV of `id,pixel_count,elevation`; segments without elevation print an empty field.
pub fn write_segment_report<W: Write>(water: &WaterMap, mut out: W) -> Result<()> {
    writeln!(out, "id,pixel_count,elevation")?;
    for s in &water.segments {
        match s.elevation {
            Some(z) => writeln!(out, "{},{},{:.6}", s.id, s.pixels.len(), z)?,
            None => writeln!(out, "{},{},", s.id, s.pixels.len())?,
        }
    }
    Ok(())
}
