mod common;

use common::{
    bfs_labels, brute_nearest, brute_window, pixel_corners, sorted_rank, sweep_rect_area,
};
use dtm_core::groundfilter::{
    convex_hull, label_components, label_regions, min_area_rect, region_stats,
};
use dtm_core::hydro::{nearest_rank, window_counts};
use dtm_core::raster::nearest_donors;
use dtm_core::slope::BreakMask;
use dtm_core::{GridSpec, Raster};
use proptest::prelude::*;

fn mask_strategy(max: usize) -> impl Strategy<Value = Raster<bool>> {
    (1..=max, 1..=max, 0.05f64..0.95).prop_flat_map(|(w, h, p)| {
        prop::collection::vec(prop::bool::weighted(p), w * h)
            .prop_map(move |v| Raster::from_vec(w, h, v).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn labeling_matches_flood_fill(mask in mask_strategy(64)) {
        let (labels, n) = label_components(&mask);
        let (expect, m) = bfs_labels(&mask);
        prop_assert_eq!(n, m);
        prop_assert_eq!(labels, expect);
    }

    #[test]
    fn void_fill_matches_brute_force(mask in mask_strategy(64)) {
        prop_assume!(mask.as_slice().iter().any(|&b| b));
        prop_assert_eq!(nearest_donors(&mask).unwrap(), brute_nearest(&mask));
    }

    #[test]
    fn sparse_void_fill_matches_brute_force(w in 1usize..=64, h in 1usize..=64,
                                            seeds in prop::collection::vec((0usize..4096, 0usize..4096), 1..6)) {
        // Few seeds make long equidistant ties common.
        let mut mask = Raster::filled(w, h, false);
        for (a, b) in seeds {
            *mask.get_mut(a % h, b % w) = true;
        }
        prop_assert_eq!(nearest_donors(&mask).unwrap(), brute_nearest(&mask));
    }

    #[test]
    fn window_sums_match_brute_force(mask in mask_strategy(64), half in 0usize..6) {
        let occ = mask.map(|&b| if b { 3 } else { 0 });
        let window = 2 * half + 1;
        prop_assert_eq!(window_counts(&occ, window), brute_window(&occ, window));
    }

    #[test]
    fn rectangle_matches_rotation_sweep(pts in prop::collection::vec((-50f64..50.0, -50f64..50.0), 3..40)) {
        let hull = convex_hull(&pts);
        prop_assume!(hull.len() >= 3);
        let got = min_area_rect(&pts);
        let expect = sweep_rect_area(&pts);
        prop_assume!(expect > 1e-6);
        prop_assert!(got <= expect * (1.0 + 1e-9), "calipers {} above sweep {}", got, expect);
        prop_assert!((got - expect).abs() <= 1e-3 * expect, "calipers {} vs sweep {}", got, expect);
    }

    #[test]
    fn region_rectangularity_matches_sweep(mask in mask_strategy(24)) {
        let (w, h) = (mask.ncols(), mask.nrows());
        let grid = GridSpec::new(0.0, 0.0, 1.0, w, h).unwrap();
        let seg = label_regions(&BreakMask { grid, is_break: mask.map(|&b| !b) });
        let stats = region_stats(&seg);
        for s in &stats.regions {
            let region = seg.label.map(|&l| l == s.label);
            let expect = sweep_rect_area(&pixel_corners(&region)).max(s.pixel_count as f64);
            prop_assert!((s.mbr_area_m2 - expect).abs() <= 1e-3 * expect);
            prop_assert!(s.rectangularity > 0.0 && s.rectangularity <= 1.0);
        }
    }

    #[test]
    fn percentile_matches_sorted_list(v in prop::collection::vec(-100f64..100.0, 1..300)) {
        let mut work = v.clone();
        prop_assert_eq!(nearest_rank(&mut work, 0.10), Some(sorted_rank(&v, 1, 10)));
        prop_assert_eq!(nearest_rank(&mut work, 0.5), Some(sorted_rank(&v, 1, 2)));
    }
}
