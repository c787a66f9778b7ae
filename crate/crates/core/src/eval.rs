//! Tiling comparison of two elevation rasters.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Raster;

/// Default tile edge: 1000 px, i.e. 0.5 km at 0.5 m cells.
pub const DEFAULT_TILE_PX: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TileMetrics {
    pub row: usize,
    pub col: usize,
    pub valid_px: usize,
    pub mae: Option<f64>,
    pub rmse: Option<f64>,
    /// 1-based position in the descending-MAE ranking; none for empty tiles.
    pub rank: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TileReport {
    pub tile_px: usize,
    pub tile_rows: usize,
    pub tile_cols: usize,
    /// Tiles in row-major tile order.
    pub tiles: Vec<TileMetrics>,
    /// Indices into `tiles` sorted by MAE descending, ties by (row, col).
    pub ranking: Vec<usize>,
    pub global_mae: Option<f64>,
    pub global_rmse: Option<f64>,
}

/// Per-tile MAE and RMSE between `a` and `b`.
///
/// Pixels set in `exclude`, and pixels that are not finite in either raster,
/// are left out. Tile rows and columns are counted from the first raster row.
pub fn compare_tiled(
    a: &Raster<f64>,
    b: &Raster<f64>,
    exclude: Option<&Raster<bool>>,
    tile_px: usize,
) -> Result<TileReport> {
    if !a.same_shape(b) {
        return Err(Error::GridMismatch(format!(
            "{}x{} vs {}x{}",
            a.ncols(),
            a.nrows(),
            b.ncols(),
            b.nrows()
        )));
    }
    if let Some(m) = exclude {
        if !a.same_shape(m) {
            return Err(Error::GridMismatch(format!(
                "mask {}x{} vs rasters {}x{}",
                m.ncols(),
                m.nrows(),
                a.ncols(),
                a.nrows()
            )));
        }
    }
    if tile_px == 0 {
        return Err(Error::InvalidParameter("tile size must be >= 1".into()));
    }
    let tile_rows = a.nrows().div_ceil(tile_px);
    let tile_cols = a.ncols().div_ceil(tile_px);

    let sums: Vec<(usize, usize, usize, f64, f64)> = (0..tile_rows * tile_cols)
        .into_par_iter()
        .map(|t| {
            let (tr, tc) = (t / tile_cols, t % tile_cols);
            let mut n = 0usize;
            let mut abs = 0.0f64;
            let mut sq = 0.0f64;
            for r in tr * tile_px..((tr + 1) * tile_px).min(a.nrows()) {
                for c in tc * tile_px..((tc + 1) * tile_px).min(a.ncols()) {
                    if exclude.is_some_and(|m| *m.get(r, c)) {
                        continue;
                    }
                    let (va, vb) = (*a.get(r, c), *b.get(r, c));
                    if !(va.is_finite() && vb.is_finite()) {
                        continue;
                    }
                    let d = va - vb;
                    n += 1;
                    abs += d.abs();
                    sq += d * d;
                }
            }
            (tr, tc, n, abs, sq)
        })
        .collect();

    let mut tiles: Vec<TileMetrics> = sums
        .iter()
        .map(|&(row, col, n, abs, sq)| {
            let (mae, rmse) = if n == 0 {
                (None, None)
            } else {
                (Some(abs / n as f64), Some((sq / n as f64).sqrt()))
            };
            TileMetrics {
                row,
                col,
                valid_px: n,
                mae,
                rmse,
                rank: None,
            }
        })
        .collect();

    let mut ranking: Vec<usize> = (0..tiles.len())
        .filter(|&i| tiles[i].mae.is_some())
        .collect();
    ranking.sort_by(|&i, &j| {
        let (ti, tj) = (&tiles[i], &tiles[j]);
        tj.mae
            .unwrap()
            .total_cmp(&ti.mae.unwrap())
            .then((ti.row, ti.col).cmp(&(tj.row, tj.col)))
    });
    for (pos, &i) in ranking.iter().enumerate() {
        tiles[i].rank = Some(pos + 1);
    }

    let total: usize = sums.iter().map(|s| s.2).sum();
    let (global_mae, global_rmse) = if total == 0 {
        (None, None)
    } else {
        let abs: f64 = sums.iter().map(|s| s.3).sum();
        let sq: f64 = sums.iter().map(|s| s.4).sum();
        (Some(abs / total as f64), Some((sq / total as f64).sqrt()))
    };

    Ok(TileReport {
        tile_px,
        tile_rows,
        tile_cols,
        tiles,
        ranking,
        global_mae,
        global_rmse,
    })
}

/// CSV of `tile_row,tile_col,valid_px,mae,rmse,rank`, in ranking order then empty tiles.
pub fn write_tile_report<W: Write>(report: &TileReport, mut out: W) -> Result<()> {
    writeln!(out, "tile_row,tile_col,valid_px,mae,rmse,rank")?;
    let empty = report
        .tiles
        .iter()
        .enumerate()
        .filter(|(_, t)| t.rank.is_none())
        .map(|(i, _)| i);
    for i in report.ranking.iter().copied().chain(empty) {
        let t = &report.tiles[i];
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        let rank = t.rank.map(|r| r.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            t.row,
            t.col,
            t.valid_px,
            fmt(t.mae),
            fmt(t.rmse),
            rank
        )?;
    }
    Ok(())
}
