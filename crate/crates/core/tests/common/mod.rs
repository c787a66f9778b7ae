//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::VecDeque;

use dtm_core::Raster;

/// Flood-fill labels numbered in row-major order of each component's first pixel.
pub fn bfs_labels(mask: &Raster<bool>) -> (Raster<u32>, u32) {
    let (w, h) = (mask.ncols(), mask.nrows());
    let mut labels = Raster::filled(w, h, 0u32);
    let mut next = 0;
    for start in 0..w * h {
        if !mask[start] || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            let (r, c) = ((i / w) as isize, (i % w) as isize);
            for (dr, dc) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
                let (nr, nc) = (r + dr, c + dc);
                if nr < 0 || nc < 0 || nr >= h as isize || nc >= w as isize {
                    continue;
                }
                let j = nr as usize * w + nc as usize;
                if mask[j] && labels[j] == 0 {
                    labels[j] = next;
                    queue.push_back(j);
                }
            }
        }
    }
    (labels, next)
}

/// Nearest seed index by exhaustive search; ties go to the smaller index.
pub fn brute_nearest(seeds: &Raster<bool>) -> Vec<usize> {
    let w = seeds.ncols();
    let all: Vec<usize> = (0..seeds.len()).filter(|&i| seeds[i]).collect();
    (0..seeds.len())
        .map(|i| {
            let (r, c) = ((i / w) as i64, (i % w) as i64);
            *all.iter()
                .min_by_key(|&&j| {
                    let (sr, sc) = ((j / w) as i64, (j % w) as i64);
                    ((r - sr).pow(2) + (c - sc).pow(2), j)
                })
                .unwrap()
        })
        .collect()
}

/// Occupied-cell count and visible-cell count of each clipped window, by direct summation.
pub fn brute_window(occ: &Raster<u32>, window: usize) -> Raster<(u32, u32)> {
    let half = (window / 2) as isize;
    let (w, h) = (occ.ncols() as isize, occ.nrows() as isize);
    Raster::from_fn(occ.ncols(), occ.nrows(), |r, c| {
        let (mut sum, mut vis) = (0, 0);
        for dr in -half..=half {
            for dc in -half..=half {
                let (rr, cc) = (r as isize + dr, c as isize + dc);
                if rr >= 0 && cc >= 0 && rr < h && cc < w {
                    vis += 1;
                    sum += u32::from(*occ.get(rr as usize, cc as usize) > 0);
                }
            }
        }
        (sum, vis)
    })
}

fn bbox_area(points: &[(f64, f64)], theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in points {
        let (u, v) = (c * x + s * y, -s * x + c * y);
        x0 = x0.min(u);
        x1 = x1.max(u);
        y0 = y0.min(v);
        y1 = y1.max(v);
    }
    (x1 - x0) * (y1 - y0)
}

/// Minimum bounding-rectangle area by a 0.1 degree rotation sweep refined to 0.001 degrees.
pub fn sweep_rect_area(points: &[(f64, f64)]) -> f64 {
    let coarse = (0..900).map(|k| (k as f64 * 0.1).to_radians());
    let best = coarse
        .map(|t| (bbox_area(points, t), t))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap();
    (-200..=200)
        .map(|k| bbox_area(points, best.1 + (k as f64 * 0.001).to_radians()))
        .fold(best.0, f64::min)
}

/// Pixel-square corners of every true pixel, in pixel units.
pub fn pixel_corners(mask: &Raster<bool>) -> Vec<(f64, f64)> {
    let w = mask.ncols();
    let mut pts = Vec::new();
    for i in 0..mask.len() {
        if mask[i] {
            let (x, y) = ((i % w) as f64, (i / w) as f64);
            pts.extend_from_slice(&[(x, y), (x + 1.0, y), (x, y + 1.0), (x + 1.0, y + 1.0)]);
        }
    }
    pts
}

/// Ascending sort, then the element at 1-based index `ceil(n * num / den)` in exact integers.
pub fn sorted_rank(values: &[f64], num: usize, den: usize) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = (v.len() * num).div_ceil(den).clamp(1, v.len());
    v[k - 1]
}
