//! Fine rasterization: lowest-return binning and nearest-neighbour void filling.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Raster};
use crate::ingest::{BBox, PointCloud};

/// Lowest elevation and point count per cell before void filling.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseDsm {
    pub grid: GridSpec,
    pub elev: Raster<Option<f64>>,
    pub occupancy: Raster<u32>,
    /// Points that fell outside the grid.
    pub dropped: usize,
}

impl SparseDsm {
    pub fn occupied_cells(&self) -> usize {
        self.occupancy.as_slice().iter().filter(|&&n| n > 0).count()
    }
}

/// Fully populated surface model.
#[derive(Debug, Clone, PartialEq)]
pub struct Dsm {
    pub grid: GridSpec,
    pub elev: Raster<f64>,
}

/// Grid anchored at the lower-left of `bbox` that covers it with square cells.
pub fn make_grid_spec(bbox: &BBox, cell: f64) -> Result<GridSpec> {
    if !(cell.is_finite() && cell > 0.0) {
        return Err(Error::NonPositiveCell(cell));
    }
    let ncols = ((bbox.width() / cell).ceil() as usize).max(1);
    let nrows = ((bbox.height() / cell).ceil() as usize).max(1);
    GridSpec::new(bbox.min_x, bbox.min_y, cell, ncols, nrows)
}

/// Bins points into `grid`, keeping the lowest z per cell.
pub fn rasterize_min(pc: &PointCloud, grid: &GridSpec) -> SparseDsm {
    let cells: Vec<Option<usize>> = pc
        .points()
        .par_iter()
        .map(|p| grid.locate(p.x, p.y).map(|(r, c)| grid.index(r, c)))
        .collect();

    let mut elev = Raster::filled(grid.ncols, grid.nrows, None::<f64>);
    let mut occupancy = Raster::filled(grid.ncols, grid.nrows, 0u32);
    let mut dropped = 0;
    for (p, cell) in pc.points().iter().zip(cells) {
        let Some(i) = cell else {
            dropped += 1;
            continue;
        };
        occupancy[i] += 1;
        let e = &mut elev[i];
        *e = Some(match *e {
            Some(z) => z.min(p.z),
            None => p.z,
        });
    }
    SparseDsm {
        grid: *grid,
        elev,
        occupancy,
        dropped,
    }
}

const NO_DONOR: usize = usize::MAX;

/// Fills void cells with the value of the Euclidean-nearest occupied cell.
///
/// Equidistant donors resolve to the smaller row-major index.
pub fn fill_voids_nearest(sparse: &SparseDsm) -> Result<Dsm> {
    let donors = nearest_donors(&sparse.elev.map(Option::is_some))?;
    let values = sparse.elev.as_slice();
    let elev: Vec<f64> = donors
        .par_iter()
        .map(|&d| values[d].expect("donor cell is occupied"))
        .collect();
    Ok(Dsm {
        grid: sparse.grid,
        elev: Raster::from_vec(sparse.grid.ncols, sparse.grid.nrows, elev)?,
    })
}

/// For every cell, the flat index of the nearest `true` cell (itself when set).
///
/// Exact squared-Euclidean distance transform with donor tracking: a column
/// pass finds the nearest seed per column, then a lower envelope of
/// parabolas per row combines columns.
pub fn nearest_donors(seeds: &Raster<bool>) -> Result<Vec<usize>> {
    let ncols = seeds.ncols();
    let nrows = seeds.nrows();
    if !seeds.as_slice().iter().any(|&s| s) {
        return Err(Error::AllVoid);
    }

    // Column pass, stored column-major: (row distance, donor row).
    let columns: Vec<Vec<(u64, usize)>> = (0..ncols)
        .into_par_iter()
        .map(|c| column_nearest(seeds, c))
        .collect();

    let out: Vec<Vec<usize>> = (0..nrows)
        .into_par_iter()
        .map(|r| row_envelope(&columns, r, ncols))
        .collect();
    Ok(out.into_iter().flatten().collect())
}

fn column_nearest(seeds: &Raster<bool>, c: usize) -> Vec<(u64, usize)> {
    let nrows = seeds.nrows();
    let mut best = vec![(u64::MAX, NO_DONOR); nrows];
    // Downward sweep keeps the nearest seed at or below the row (smaller index).
    let mut last: Option<usize> = None;
    for (r, b) in best.iter_mut().enumerate() {
        if *seeds.get(r, c) {
            last = Some(r);
        }
        if let Some(s) = last {
            *b = ((r - s) as u64, s);
        }
    }
    let mut next: Option<usize> = None;
    for r in (0..nrows).rev() {
        if *seeds.get(r, c) {
            next = Some(r);
        }
        if let Some(s) = next {
            let d = (s - r) as u64;
            // Strict: an equally distant seed below already has the smaller index.
            if d < best[r].0 {
                best[r] = (d, s);
            }
        }
    }
    best
}

fn row_envelope(columns: &[Vec<(u64, usize)>], r: usize, ncols: usize) -> Vec<usize> {
    // f(q) = squared row distance in column q, or none.
    let f = |q: usize| -> Option<u64> {
        let (d, donor) = columns[q][r];
        (donor != NO_DONOR).then(|| d * d)
    };
    let candidates: Vec<usize> = (0..ncols).filter(|&q| f(q).is_some()).collect();
    if candidates.is_empty() {
        // Unreachable when at least one seed exists: every column pass fills
        // every row of a column that has a seed.
        return vec![NO_DONOR; ncols];
    }

    // Lower envelope of parabolas y = (x - q)^2 + f(q).
    let mut v: Vec<usize> = Vec::with_capacity(candidates.len());
    let mut z: Vec<f64> = Vec::with_capacity(candidates.len() + 1);
    let key = |q: usize| f(q).unwrap() as f64 + (q * q) as f64;
    for &q in &candidates {
        loop {
            let Some(&p) = v.last() else {
                v.push(q);
                z.push(f64::NEG_INFINITY);
                break;
            };
            let s = (key(q) - key(p)) / (2.0 * (q as f64 - p as f64));
            // Parabolas touching the envelope at a single point are kept so
            // exact ties remain visible to the query below.
            if s < *z.last().unwrap() {
                v.pop();
                z.pop();
                continue;
            }
            v.push(q);
            z.push(s);
            break;
        }
    }

    let dist = |x: usize, q: usize| -> u64 {
        let dx = x.abs_diff(q) as u64;
        dx * dx + f(q).unwrap()
    };
    let donor_index = |q: usize| columns[q][r].1 * ncols + q;

    let mut out = Vec::with_capacity(ncols);
    let mut k = 0;
    for x in 0..ncols {
        let xf = x as f64;
        while k + 1 < v.len() && z[k + 1] < xf {
            k += 1;
        }
        // Envelope pieces whose closed interval contains x.
        let mut best = (dist(x, v[k]), donor_index(v[k]));
        let mut j = k + 1;
        while j < v.len() && z[j] <= xf {
            let cand = (dist(x, v[j]), donor_index(v[j]));
            if cand < best {
                best = cand;
            }
            j += 1;
        }
        out.push(best.1);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Point;

    fn cloud(pts: &[(f64, f64, f64)]) -> PointCloud {
        PointCloud::from_points(pts.iter().map(|&(x, y, z)| Point::new(x, y, z)).collect()).0
    }

    #[test]
    fn grid_spec_examples() {
        let g = make_grid_spec(&BBox::new(0.0, 0.0, 10.0, 10.0).unwrap(), 0.5).unwrap();
        assert_eq!((g.ncols, g.nrows), (20, 20));
        let g = make_grid_spec(&BBox::new(0.0, 0.0, 10.1, 10.0).unwrap(), 0.5).unwrap();
        assert_eq!((g.ncols, g.nrows), (21, 20));
        let g = make_grid_spec(&BBox::new(5.0, 5.0, 5.0, 5.0).unwrap(), 1.0).unwrap();
        assert_eq!((g.ncols, g.nrows), (1, 1));
        assert!(matches!(
            make_grid_spec(&BBox::new(0.0, 0.0, 1.0, 1.0).unwrap(), -1.0),
            Err(Error::NonPositiveCell(_))
        ));
    }

    #[test]
    fn keeps_lowest_point() {
        let g = GridSpec::new(0.0, 0.0, 0.5, 2, 2).unwrap();
        let s = rasterize_min(&cloud(&[(0.1, 0.1, 5.0), (0.2, 0.3, 3.0)]), &g);
        assert_eq!(*s.elev.get(0, 0), Some(3.0));
        assert_eq!(*s.occupancy.get(0, 0), 2);
        assert_eq!(*s.elev.get(1, 1), None);
        assert_eq!(*s.occupancy.get(1, 1), 0);
    }

    #[test]
    fn max_edge_clamped_and_outside_dropped() {
        let g = GridSpec::new(0.0, 0.0, 1.0, 2, 2).unwrap();
        let s = rasterize_min(
            &cloud(&[(2.0, 2.0, 1.0), (2.5, 0.5, 1.0), (-0.1, 0.0, 1.0)]),
            &g,
        );
        assert_eq!(*s.occupancy.get(1, 1), 1);
        assert_eq!(s.dropped, 2);
    }

    #[test]
    fn fill_single_cell_everywhere() {
        let g = GridSpec::new(0.0, 0.0, 1.0, 5, 4).unwrap();
        let s = rasterize_min(&cloud(&[(2.5, 1.5, 7.0)]), &g);
        let d = fill_voids_nearest(&s).unwrap();
        assert!(d.elev.as_slice().iter().all(|&v| v == 7.0));
    }

    #[test]
    fn fill_row_split() {
        let g = GridSpec::new(0.0, 0.0, 1.0, 10, 1).unwrap();
        let s = rasterize_min(&cloud(&[(0.5, 0.5, 1.0), (9.5, 0.5, 9.0)]), &g);
        let d = fill_voids_nearest(&s).unwrap();
        assert_eq!(
            d.elev.as_slice(),
            &[1.0, 1.0, 1.0, 1.0, 1.0, 9.0, 9.0, 9.0, 9.0, 9.0]
        );
    }

    #[test]
    fn fill_tie_prefers_smaller_index() {
        // Void at center of a plus of four donors, all at distance 1.
        let g = GridSpec::new(0.0, 0.0, 1.0, 3, 3).unwrap();
        let s = rasterize_min(
            &cloud(&[
                (1.5, 0.5, 1.0),
                (0.5, 1.5, 2.0),
                (2.5, 1.5, 3.0),
                (1.5, 2.5, 4.0),
            ]),
            &g,
        );
        let d = fill_voids_nearest(&s).unwrap();
        assert_eq!(*d.elev.get(1, 1), 1.0);
        // Corner (0,0): donors (0,1) idx 1 and (1,0) idx 3 tie; idx 1 wins.
        assert_eq!(*d.elev.get(0, 0), 1.0);
        // Corner (2,2): donors (2,1) idx 7 and (1,2) idx 5 tie; idx 5 wins.
        assert_eq!(*d.elev.get(2, 2), 3.0);
    }

    #[test]
    fn all_void_errors() {
        let g = GridSpec::new(0.0, 0.0, 1.0, 3, 3).unwrap();
        let s = rasterize_min(&PointCloud::default(), &g);
        assert!(matches!(fill_voids_nearest(&s), Err(Error::AllVoid)));
    }
}
