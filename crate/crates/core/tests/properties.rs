use dtm_core::eval::compare_tiled;
use dtm_core::groundfilter::GroundMask;
use dtm_core::hydro::water_mask;
use dtm_core::interp::{interpolate_nonground, PixelSource};
use dtm_core::raster::{rasterize_min, Dsm};
use dtm_core::slope::{break_line_mask, slope_map};
use dtm_core::{GridSpec, Point, PointCloud, Raster};
use proptest::prelude::*;

fn surface(w: usize, h: usize) -> impl Strategy<Value = Raster<f64>> {
    prop::collection::vec(0f64..20.0, w * h).prop_map(move |v| Raster::from_vec(w, h, v).unwrap())
}

fn dsm_of(elev: Raster<f64>, cell: f64) -> Dsm {
    let grid = GridSpec::new(0.0, 0.0, cell, elev.ncols(), elev.nrows()).unwrap();
    Dsm { grid, elev }
}

/// Quarter turn counter-clockwise: new (r, c) takes old (c, w - 1 - r).
fn rotate(r: &Raster<f64>) -> Raster<f64> {
    let (w, h) = (r.ncols(), r.nrows());
    Raster::from_fn(h, w, |row, col| *r.get(col, w - 1 - row))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn slope_ignores_vertical_offset(elev in surface(12, 9), dz in -1e3f64..1e3) {
        let a = slope_map(&dsm_of(elev.clone(), 0.5)).unwrap();
        let b = slope_map(&dsm_of(elev.map(|z| z + dz), 0.5)).unwrap();
        for (x, y) in a.slope_deg.as_slice().iter().zip(b.slope_deg.as_slice()) {
            prop_assert!((x - y).abs() < 1e-6);
        }
    }

    #[test]
    fn slope_rotates_with_raster(elev in surface(11, 7)) {
        let a = slope_map(&dsm_of(elev.clone(), 1.0)).unwrap();
        let b = slope_map(&dsm_of(rotate(&elev), 1.0)).unwrap();
        let ra = rotate(&a.slope_deg);
        for (x, y) in ra.as_slice().iter().zip(b.slope_deg.as_slice()) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn break_sets_shrink_with_threshold(elev in surface(10, 10), t1 in 1f64..89.0, t2 in 1f64..89.0) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let s = slope_map(&dsm_of(elev, 0.5)).unwrap();
        let a = break_line_mask(&s, lo).unwrap();
        let b = break_line_mask(&s, hi).unwrap();
        for (x, y) in a.is_break.as_slice().iter().zip(b.is_break.as_slice()) {
            prop_assert!(!*y || *x);
        }
    }

    #[test]
    fn water_mask_grows_with_threshold(occ in prop::collection::vec(0u32..3, 20 * 16), t1 in 0u32..40, t2 in 0u32..40) {
        let occ = Raster::from_vec(20, 16, occ).unwrap();
        let (lo, hi) = (t1.min(t2), t1.max(t2));
        let a = water_mask(&occ, lo, 9);
        let b = water_mask(&occ, hi, 9);
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            prop_assert!(!*x || *y);
        }
    }

    #[test]
    fn compare_is_symmetric_and_weighted(a in surface(13, 9), b in surface(13, 9), tile in 1usize..8) {
        let ab = compare_tiled(&a, &b, None, tile).unwrap();
        let ba = compare_tiled(&b, &a, None, tile).unwrap();
        prop_assert_eq!(&ab.tiles, &ba.tiles);
        let n: usize = ab.tiles.iter().map(|t| t.valid_px).sum();
        prop_assert_eq!(n, 13 * 9);
        let weighted: f64 = ab.tiles.iter().map(|t| t.mae.unwrap() * t.valid_px as f64).sum::<f64>() / n as f64;
        prop_assert!((weighted - ab.global_mae.unwrap()).abs() < 1e-9);
    }

    #[test]
    fn interpolation_is_bounded(elev in surface(16, 12),
                                holes in prop::collection::vec(prop::bool::weighted(0.4), 16 * 12)) {
        let dsm = dsm_of(elev, 0.5);
        let is_ground = Raster::from_vec(16, 12, holes.iter().map(|h| !h).collect()).unwrap();
        prop_assume!(is_ground.as_slice().iter().filter(|&&g| g).count() >= 3);
        let ground = GroundMask { grid: dsm.grid, is_ground };
        let Ok(dtm) = interpolate_nonground(&dsm, &ground) else { return Ok(()) };
        let support: Vec<f64> = (0..dsm.elev.len()).filter(|&i| ground.is_ground[i]).map(|i| dsm.elev[i]).collect();
        let lo = support.iter().cloned().fold(f64::MAX, f64::min);
        let hi = support.iter().cloned().fold(f64::MIN, f64::max);
        for i in 0..dtm.elev.len() {
            if ground.is_ground[i] {
                prop_assert_eq!(dtm.elev[i], dsm.elev[i]);
                prop_assert_eq!(dtm.source[i], PixelSource::MeasuredGround);
            } else {
                prop_assert!(dtm.elev[i] >= lo - 1e-9 && dtm.elev[i] <= hi + 1e-9);
            }
        }
    }

    #[test]
    fn affine_fields_reproduced_for_interior_masks(a in -5f64..5.0, b in -2f64..2.0, c in -2f64..2.0,
                                                   holes in prop::collection::vec(prop::bool::weighted(0.5), 20 * 20)) {
        let grid = GridSpec::new(100.0, 200.0, 0.5, 20, 20).unwrap();
        let plane = |r: usize, col: usize| {
            let (x, y) = grid.cell_center(r, col);
            a + b * (x - 100.0) + c * (y - 200.0)
        };
        let dsm = Dsm { grid, elev: Raster::from_fn(20, 20, plane) };
        let is_ground = Raster::from_fn(20, 20, |r, col| {
            r == 0 || col == 0 || r == 19 || col == 19 || !holes[r * 20 + col]
        });
        let ground = GroundMask { grid, is_ground };
        let dtm = interpolate_nonground(&dsm, &ground).unwrap();
        for r in 0..20 {
            for col in 0..20 {
                prop_assert!((dtm.elev.get(r, col) - plane(r, col)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn rasterization_ignores_point_order(pts in prop::collection::vec((0f64..10.0, 0f64..10.0, -5f64..5.0), 1..300),
                                         seed in any::<u64>()) {
        let grid = GridSpec::new(0.0, 0.0, 0.5, 20, 20).unwrap();
        let cloud: Vec<Point> = pts.iter().map(|&(x, y, z)| Point::new(x, y, z)).collect();
        let mut shuffled = cloud.clone();
        // Deterministic Fisher-Yates driven by a simple LCG.
        let mut s = seed | 1;
        for i in (1..shuffled.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (s >> 33) as usize % (i + 1));
        }
        let a = rasterize_min(&PointCloud::from_points(cloud).0, &grid);
        let b = rasterize_min(&PointCloud::from_points(shuffled).0, &grid);
        prop_assert_eq!(a, b);
    }
}
